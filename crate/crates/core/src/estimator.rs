//! Conditional maximum-likelihood fitting in `(δ, γ)` coordinates, the two
//! asymptotic-covariance estimators, and the delta-method map back to
//! `(β, σ²)`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModelKind, ReparamPoint};
use crate::error::{Error, Result};
use crate::model::{self, Need, SampleSums};
use crate::par::Exec;

/// Relative eigenvalue floor: a symmetric PSD matrix counts as singular when
/// its smallest eigenvalue is below this multiple of its mean eigenvalue.
pub const SINGULARITY_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// OLS on the uncensored observations, mapped into `(δ, γ)`.
    Ols,
    Point(ReparamPoint),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the sup-norm of the average score.
    pub grad_tol: f64,
    /// Line search gives up once the step is shorter than this (sup-norm).
    pub step_tol: f64,
    /// `γ` is kept strictly above this value.
    pub gamma_floor: f64,
    pub init: Init,
    /// Total number of starting points for the truncated model (the base
    /// start plus perturbed copies). The Tobit objective is concave and
    /// always uses a single start.
    pub n_starts: usize,
    /// Half-width of the multiplicative perturbation of each coordinate.
    pub perturbation: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-8,
            step_tol: 1e-12,
            gamma_floor: 1e-10,
            init: Init::Ols,
            n_starts: 5,
            perturbation: 0.2,
            seed: 0x5eed,
            exec: Exec::default(),
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !positive(self.grad_tol) || !positive(self.step_tol) || !positive(self.gamma_floor) {
            return Err(Error::Config(
                "grad_tol, step_tol and gamma_floor must be positive".into(),
            ));
        }
        if self.n_starts == 0 || !(0.0..1.0).contains(&self.perturbation) {
            return Err(Error::Config(
                "n_starts must be positive and perturbation in [0, 1)".into(),
            ));
        }
        if let Init::Point(p) = &self.init {
            if p.gamma <= self.gamma_floor {
                return Err(Error::Config(
                    "initial gamma must exceed gamma_floor".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Estimates mapped back to the original `(β, σ²)` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrigScale {
    pub beta: Vec<f64>,
    pub sigma2: f64,
    /// Covariance of `(β̂, σ̂²)`, already divided by `n`.
    pub cov: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub n: usize,
    pub theta_hat: ReparamPoint,
    /// Sample log-likelihood `Σ log f(y_t | x_t)` at `theta_hat`.
    pub loglik: f64,
    pub n_iter: usize,
    pub converged: bool,
    pub avg_score_norm: f64,
    pub avg_score: DVector<f64>,
    pub avg_hessian: DMatrix<f64>,
    /// `(1/n) Σ s_t s_t'` at `theta_hat`.
    pub avg_opg: DMatrix<f64>,
    pub min_eig_neg_avg_hessian: f64,
    /// `None` when the average Hessian is numerically singular.
    pub avar_hessian: Option<DMatrix<f64>>,
    pub avar_opg: Option<DMatrix<f64>>,
    pub orig: Option<OrigScale>,
    /// Average log-likelihood after each accepted iteration of the winning
    /// start, beginning with the starting value.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn avg_loglik(&self) -> f64 {
        self.loglik / self.n as f64
    }

    /// `−(average Hessian)⁻¹`, or the nonsingularity error.
    pub fn avar_hessian(&self) -> Result<DMatrix<f64>> {
        avar_from_hessian(&self.avg_hessian)
    }

    /// `(average outer product of scores)⁻¹`, or the nonsingularity error.
    pub fn avar_opg(&self) -> Result<DMatrix<f64>> {
        avar_from_opg(&self.avg_opg)
    }

    /// Estimated covariance of `θ̂`, i.e. the Hessian-form Avar over `n`.
    pub fn cov_theta(&self) -> Result<DMatrix<f64>> {
        Ok(self.avar_hessian()? / self.n as f64)
    }

    pub fn std_errors_theta(&self) -> Result<Vec<f64>> {
        Ok(self
            .cov_theta()?
            .diagonal()
            .iter()
            .map(|v| v.sqrt())
            .collect())
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn singularity_threshold(m: &DMatrix<f64>) -> f64 {
    SINGULARITY_RTOL * m.trace().abs() / m.nrows() as f64
}

/// Inverse of a symmetric positive-definite information matrix, after the
/// nonsingularity check.
fn invert_information(info: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let min_eig = min_eigenvalue(info);
    let threshold = singularity_threshold(info);
    if !(min_eig >= threshold) || !(min_eig > 0.0) {
        return Err(Error::Singular { min_eig, threshold });
    }
    let inv = Cholesky::new(info.clone())
        .ok_or(Error::Singular { min_eig, threshold })?
        .inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `Avar = −{E[H]}⁻¹` from an average Hessian.
pub fn avar_from_hessian(avg_hessian: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    invert_information(&-avg_hessian)
}

/// `Avar = {E[ss']}⁻¹` from an average outer product of scores.
pub fn avar_from_opg(avg_opg: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    invert_information(avg_opg)
}

/// Jacobian of `(δ, γ) ↦ (β, σ²) = (δ/γ, 1/γ²)`.
pub fn delta_jacobian(theta: &ReparamPoint) -> DMatrix<f64> {
    let k = theta.k();
    let g = theta.gamma;
    let mut j = DMatrix::zeros(k + 1, k + 1);
    for i in 0..k {
        j[(i, i)] = 1.0 / g;
        j[(i, k)] = -theta.delta[i] / (g * g);
    }
    j[(k, k)] = -2.0 / (g * g * g);
    j
}

/// Maps `θ̂` and its Avar to `(β̂, σ̂²)` with covariance `J·(Avar/n)·J'`.
pub fn delta_method(theta: &ReparamPoint, avar: &DMatrix<f64>, n: usize) -> Result<OrigScale> {
    if !(theta.gamma > 0.0) {
        return Err(Error::Domain {
            what: "gamma",
            value: theta.gamma,
        });
    }
    if avar.nrows() != theta.dim() || avar.ncols() != theta.dim() {
        return Err(Error::Dimension(format!(
            "avar is {}x{}, expected {d}x{d}",
            avar.nrows(),
            avar.ncols(),
            d = theta.dim()
        )));
    }
    if n == 0 {
        return Err(Error::Config("delta method needs n > 0".into()));
    }
    let j = delta_jacobian(theta);
    let cov = &j * (avar / n as f64) * j.transpose();
    Ok(OrigScale {
        beta: theta.beta(),
        sigma2: theta.sigma2(),
        cov: (&cov + cov.transpose()) * 0.5,
    })
}

/// Relative size of objective changes treated as rounding noise.
const OBJECTIVE_RESOLUTION: f64 = 1e3 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Newton,
    /// Steepest ascent, used when the Hessian is not negative definite.
    Gradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub point: ReparamPoint,
    pub objective: f64,
    pub direction: Direction,
    /// Fraction of the full step that was taken.
    pub scale: f64,
    /// The line search found no improving step longer than `step_tol`.
    pub stalled: bool,
}

/// One safeguarded Newton iteration.
///
/// Solves `H·d = −g`; if `H` is not negative definite the step falls back to
/// `d = g`. The step is first shortened so that `γ` lands no lower than
/// halfway to the floor, then halved until `objective` does not decrease.
///
/// A full Newton step whose predicted gain `½·g'd` is below the resolution
/// of the objective is taken without the decrease test, which rounding
/// noise in the summed log-likelihood would otherwise fail at random.
pub fn newton_step<F>(
    current: &ReparamPoint,
    current_objective: f64,
    avg_score: &DVector<f64>,
    avg_hessian: &DMatrix<f64>,
    opts: &FitOptions,
    objective: F,
) -> StepOutcome
where
    F: Fn(&ReparamPoint) -> f64,
{
    let (dir, direction) = match Cholesky::new(-avg_hessian) {
        Some(ch) => (ch.solve(avg_score), Direction::Newton),
        None => (avg_score.clone(), Direction::Gradient),
    };
    let theta = current.to_vector();
    let k = current.k();
    let mut scale = 1.0_f64;
    if current.gamma + dir[k] <= opts.gamma_floor {
        scale = 0.5 * (current.gamma - opts.gamma_floor) / -dir[k];
    }
    let dir_norm = dir.amax();
    let predicted_gain = 0.5 * avg_score.dot(&dir);
    let resolution = OBJECTIVE_RESOLUTION * current_objective.abs().max(1.0);
    if direction == Direction::Newton && scale == 1.0 && predicted_gain <= resolution {
        let cand = &theta + &dir;
        let point = ReparamPoint {
            delta: cand.as_slice()[..k].to_vec(),
            gamma: cand[k],
        };
        let value = objective(&point);
        if value.is_finite() && value >= current_objective - resolution {
            return StepOutcome {
                point,
                objective: value,
                direction,
                scale,
                stalled: false,
            };
        }
    }
    while scale * dir_norm >= opts.step_tol && dir_norm.is_finite() {
        let cand = &theta + &dir * scale;
        if cand[k] > opts.gamma_floor {
            let point = ReparamPoint {
                delta: cand.as_slice()[..k].to_vec(),
                gamma: cand[k],
            };
            let value = objective(&point);
            if value.is_finite() && value >= current_objective {
                return StepOutcome {
                    point,
                    objective: value,
                    direction,
                    scale,
                    stalled: false,
                };
            }
        }
        scale *= 0.5;
    }
    StepOutcome {
        point: current.clone(),
        objective: current_objective,
        direction,
        scale: 0.0,
        stalled: true,
    }
}

/// OLS of `y` on `x` over the uncensored rows (all rows if there are too
/// few), mapped into `(δ, γ)`.
pub fn ols_start(data: &Dataset) -> Result<ReparamPoint> {
    let k = data.k();
    let all = cross_products(data, |_| true);
    let min_eig = min_eigenvalue(&all.0);
    if !(min_eig > singularity_threshold(&all.0)) {
        return Err(Error::Collinearity { min_eig });
    }
    let uncensored = data.n() - data.n_censored();
    let (xtx, xty, m) = if uncensored > k {
        let sub = cross_products(data, |t| !data.is_censored(t));
        if min_eigenvalue(&sub.0) > singularity_threshold(&sub.0) {
            sub
        } else {
            all
        }
    } else {
        all
    };
    let beta = Cholesky::new(xtx)
        .ok_or(Error::Collinearity { min_eig })?
        .solve(&xty);
    let mut rss = 0.0;
    let mut count = 0usize;
    for t in 0..data.n() {
        if m == data.n() || !data.is_censored(t) {
            let fit: f64 = data
                .row(t)
                .iter()
                .zip(beta.iter())
                .map(|(a, b)| a * b)
                .sum();
            let r = data.y()[t] - fit;
            rss += r * r;
            count += 1;
        }
    }
    let dof = if count > k { count - k } else { count.max(1) };
    let mut sigma = (rss / dof as f64).sqrt();
    if !(sigma > 1e-8) {
        sigma = 1.0;
    }
    ReparamPoint::from_original(beta.as_slice(), sigma)
}

fn cross_products<F>(data: &Dataset, keep: F) -> (DMatrix<f64>, DVector<f64>, usize)
where
    F: Fn(usize) -> bool,
{
    let k = data.k();
    let mut xtx = DMatrix::zeros(k, k);
    let mut xty = DVector::zeros(k);
    let mut m = 0;
    for t in (0..data.n()).filter(|&t| keep(t)) {
        let x = data.row(t);
        for i in 0..k {
            for j in 0..k {
                xtx[(i, j)] += x[i] * x[j];
            }
            xty[i] += x[i] * data.y()[t];
        }
        m += 1;
    }
    (xtx, xty, m)
}

struct Run {
    theta: ReparamPoint,
    objective: f64,
    n_iter: usize,
    trace: Vec<f64>,
}

fn run_from(data: &Dataset, start: ReparamPoint, opts: &FitOptions) -> Run {
    let eval = |p: &ReparamPoint| model::evaluate(data, p, Need::DERIVATIVES, opts.exec);
    let mut theta = start;
    let mut sums = eval(&theta);
    let mut objective = sums.avg_loglik();
    let mut trace = vec![objective];
    let mut n_iter = 0;
    while n_iter < opts.max_iter {
        let g = sums.avg_score();
        if g.amax() <= opts.grad_tol {
            break;
        }
        let step = newton_step(&theta, objective, &g, &sums.avg_hessian(), opts, |p| {
            model::avg_loglik(data, p, opts.exec)
        });
        if step.stalled {
            break;
        }
        debug_assert!(
            step.objective >= objective - OBJECTIVE_RESOLUTION * objective.abs().max(1.0)
        );
        theta = step.point;
        objective = step.objective;
        trace.push(objective);
        sums = eval(&theta);
        n_iter += 1;
    }
    Run {
        theta,
        objective,
        n_iter,
        trace,
    }
}

fn perturbed(base: &ReparamPoint, rng: &mut ChaCha8Rng, width: f64) -> ReparamPoint {
    let mut factor = || 1.0 + rng.random_range(-width..=width);
    ReparamPoint {
        delta: base.delta.iter().map(|d| d * factor()).collect(),
        gamma: base.gamma * factor(),
    }
}

/// Maximizes the average log conditional likelihood of `data` under its
/// model.
///
/// Hitting `max_iter` is not an error; the result comes back with
/// `converged = false`.
pub fn fit(data: &Dataset, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    let k = data.k();
    if data.n() <= k + 1 {
        return Err(Error::Degenerate(format!(
            "{} observations for {} parameters",
            data.n(),
            k + 1
        )));
    }
    if data.kind() == ModelKind::Tobit && data.n_censored() == data.n() {
        return Err(Error::Degenerate("every observation is censored".into()));
    }
    let base = match &opts.init {
        Init::Ols => ols_start(data)?,
        Init::Point(p) => {
            if p.k() != k {
                return Err(Error::Dimension(format!(
                    "initial point has {} slopes, data has {k} regressors",
                    p.k()
                )));
            }
            p.clone()
        }
    };
    let n_starts = match data.kind() {
        ModelKind::Tobit => 1,
        ModelKind::Truncated => opts.n_starts,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![base.clone()];
    for _ in 1..n_starts {
        starts.push(perturbed(&base, &mut rng, opts.perturbation));
    }
    let best = starts
        .into_iter()
        .map(|s| run_from(data, s, opts))
        .reduce(|best, run| {
            if run.objective > best.objective {
                run
            } else {
                best
            }
        })
        .expect("at least one start");

    let sums = model::evaluate(data, &best.theta, Need::ALL, opts.exec);
    Ok(summarize(data, best, &sums, opts))
}

fn summarize(data: &Dataset, run: Run, sums: &SampleSums, opts: &FitOptions) -> FitResult {
    let avg_score = sums.avg_score();
    let avg_hessian = sums.avg_hessian();
    let avg_opg = sums.avg_opg();
    let avg_score_norm = avg_score.amax();
    let avar_hessian = avar_from_hessian(&avg_hessian).ok();
    let avar_opg = avar_from_opg(&avg_opg).ok();
    let orig = avar_hessian
        .as_ref()
        .and_then(|a| delta_method(&run.theta, a, data.n()).ok());
    FitResult {
        model: data.kind(),
        n: data.n(),
        loglik: sums.loglik,
        n_iter: run.n_iter,
        converged: avg_score_norm <= opts.grad_tol,
        avg_score_norm,
        avg_score,
        min_eig_neg_avg_hessian: min_eigenvalue(&-&avg_hessian),
        avg_hessian,
        avg_opg,
        avar_hessian,
        avar_opg,
        orig,
        trace: run.trace,
        theta_hat: run.theta,
    }
}
