//! Replication study of the sampling distribution of `θ̂`, with
//! Kolmogorov–Smirnov tests against the standard normal.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::dgp::gen_dataset_stream;
use super::DgpConfig;
use crate::data::{ModelKind, ReparamPoint};
use crate::error::{Error, Result};
use crate::estimator::{delta_method, fit, FitOptions};
use crate::model::{evaluate, Need};
use crate::par::Exec;
use crate::special::std_normal_cdf;

/// Two-sided 95% normal critical value.
pub const Z_975: f64 = 1.959_963_984_540_054;
/// Replication failure share above which a report is flagged.
pub const MAX_FAILURE_RATE: f64 = 0.02;
pub const MIN_REPS: usize = 200;

/// One-sample KS distance between `sample` and the standard normal.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = std_normal_cdf(x).unwrap_or(if x > 0.0 { 1.0 } else { 0.0 });
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Asymptotic p-value of a KS distance `d` from `n` points, with Stephens'
/// small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    if n == 0 || d.is_nan() {
        return f64::NAN;
    }
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // P(K ≤ λ) = √(2π)/λ Σ exp(−(2j−1)²π²/(8λ²))
        let pi2 = std::f64::consts::PI.powi(2);
        let cdf: f64 = (1..=20)
            .map(|j| {
                let m = (2 * j - 1) as f64;
                (-m * m * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / lambda;
        1.0 - cdf
    } else {
        2.0 * (1..=100)
            .map(|j| {
                let j = j as f64;
                let sign = if j as i64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * j * j * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub model: ModelKind,
    pub n: usize,
    pub n_reps: usize,
    pub seed: u64,
    /// Reference point the estimates are standardized against.
    pub theta0: ReparamPoint,
    /// Replication index of each row of `estimates` and `standardized`.
    pub rep_index: Vec<usize>,
    /// `θ̂ = (δ̂, γ̂)` per successful replication.
    pub estimates: Vec<Vec<f64>>,
    /// `(θ̂ − θ₀) / se(θ̂)` per successful replication.
    pub standardized: Vec<Vec<f64>>,
    pub failures: Vec<RepFailure>,
    pub failure_rate: f64,
    /// More than 2% of replications failed.
    pub flagged: bool,
    pub ks_stats: Vec<f64>,
    pub ks_pvalues: Vec<f64>,
    pub ks_pvalues_bonferroni: Vec<f64>,
    pub ci_coverage: Vec<f64>,
    /// `√(mean ‖θ̂ − θ₀‖²)`
    pub rmse: f64,
    pub rmse_coords: Vec<f64>,
    /// Replication variance of `θ̂` against the mean estimated variance.
    pub theta_empirical_var: Vec<f64>,
    pub theta_estimated_var: Vec<f64>,
    /// Same for `(β̂, σ̂²)`, with the delta-method covariance.
    pub orig_empirical_var: Vec<f64>,
    pub orig_estimated_var: Vec<f64>,
    /// Mean over replications of `‖avg(ss') + avg(H)‖_F / ‖avg(ss')‖_F` at `θ̂`.
    pub info_eq_rel_err: f64,
    /// Pooled z-scores of the score at `θ₀` across all replications.
    pub score_mean_z: Vec<f64>,
}

struct RepOutcome {
    theta: Vec<f64>,
    z: Vec<f64>,
    var: Vec<f64>,
    orig: Vec<f64>,
    orig_var: Vec<f64>,
    info_rel: f64,
    score_sum: Vec<f64>,
    score_sq: Vec<f64>,
    n_obs: usize,
}

fn replicate(
    kind: ModelKind,
    dgp: &DgpConfig,
    opts: &FitOptions,
    theta0: &ReparamPoint,
    r: usize,
) -> Result<RepOutcome> {
    let data = gen_dataset_stream(kind, dgp, r as u64 + 1)?;
    let at_truth = evaluate(
        &data,
        theta0,
        Need {
            score: true,
            hessian: false,
            opg: true,
        },
        Exec::Sequential,
    );
    let dim = theta0.dim();
    let score_sum = at_truth.score.iter().copied().collect();
    let score_sq = (0..dim).map(|i| at_truth.opg[(i, i)]).collect();

    let rep_opts = FitOptions {
        exec: Exec::Sequential,
        seed: opts.seed.wrapping_add(r as u64),
        ..opts.clone()
    };
    let f = fit(&data, &rep_opts)?;
    if !f.converged {
        return Err(Error::Degenerate(format!(
            "no convergence after {} iterations (score norm {:e})",
            f.n_iter, f.avg_score_norm
        )));
    }
    let cov = f.cov_theta()?;
    let theta = f.theta_hat.to_vector();
    let var: Vec<f64> = cov.diagonal().iter().copied().collect();
    let z = (0..dim)
        .map(|j| (theta[j] - theta0.to_vector()[j]) / var[j].sqrt())
        .collect();
    let orig = delta_method(&f.theta_hat, &f.avar_hessian()?, f.n)?;
    let mut orig_point = orig.beta.clone();
    orig_point.push(orig.sigma2);
    let gap = &f.avg_opg + &f.avg_hessian;
    Ok(RepOutcome {
        theta: theta.iter().copied().collect(),
        z,
        var,
        orig: orig_point,
        orig_var: orig.cov.diagonal().iter().copied().collect(),
        info_rel: gap.norm() / f.avg_opg.norm(),
        score_sum,
        score_sq,
        n_obs: data.n(),
    })
}

fn sample_var(col: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = col.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    col.map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
}

fn mean(col: impl Iterator<Item = f64>) -> f64 {
    let (n, sum) = col.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    sum / n as f64
}

/// Fits `n_reps` independent samples drawn from `dgp` and summarizes the
/// standardized estimates against the truth.
pub fn normality_experiment(
    kind: ModelKind,
    dgp: &DgpConfig,
    n_reps: usize,
    opts: &FitOptions,
) -> Result<McReport> {
    normality_experiment_against(kind, dgp, n_reps, opts, &dgp.truth())
}

/// As [`normality_experiment`], standardizing against `theta0` instead of
/// the data-generating point.
pub fn normality_experiment_against(
    kind: ModelKind,
    dgp: &DgpConfig,
    n_reps: usize,
    opts: &FitOptions,
    theta0: &ReparamPoint,
) -> Result<McReport> {
    dgp.validate()?;
    opts.validate()?;
    if n_reps < MIN_REPS {
        return Err(Error::Config(format!(
            "n_reps must be at least {MIN_REPS}, got {n_reps}"
        )));
    }
    if theta0.k() != dgp.k() {
        return Err(Error::Dimension(
            "reference point does not match beta0".into(),
        ));
    }
    let dim = theta0.dim();
    let outcomes = opts
        .exec
        .map_range(n_reps, |r| replicate(kind, dgp, opts, theta0, r));

    let mut rep_index = Vec::new();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (index, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(o) => {
                rep_index.push(index);
                ok.push(o);
            }
            Err(e) => failures.push(RepFailure {
                index,
                reason: e.to_string(),
            }),
        }
    }
    if ok.len() < 2 {
        return Err(Error::Degenerate(format!(
            "only {} of {n_reps} replications succeeded",
            ok.len()
        )));
    }
    let failure_rate = failures.len() as f64 / n_reps as f64;
    let m = ok.len();
    let truth = theta0.to_vector();

    let mut ks_stats = Vec::with_capacity(dim);
    let mut ks_pvalues = Vec::with_capacity(dim);
    let mut ci_coverage = Vec::with_capacity(dim);
    let mut rmse_coords = Vec::with_capacity(dim);
    for j in 0..dim {
        let col: Vec<f64> = ok.iter().map(|o| o.z[j]).collect();
        let d = ks_statistic(&col);
        ks_stats.push(d);
        ks_pvalues.push(ks_pvalue(d, m));
        ci_coverage.push(col.iter().filter(|z| z.abs() <= Z_975).count() as f64 / m as f64);
        rmse_coords.push(mean(ok.iter().map(|o| (o.theta[j] - truth[j]).powi(2))).sqrt());
    }
    let ks_pvalues_bonferroni = ks_pvalues
        .iter()
        .map(|p| (p * dim as f64).min(1.0))
        .collect();
    let rmse = rmse_coords.iter().map(|r| r * r).sum::<f64>().sqrt();

    let theta_empirical_var = (0..dim)
        .map(|j| sample_var(ok.iter().map(move |o| o.theta[j])))
        .collect();
    let theta_estimated_var = (0..dim)
        .map(|j| mean(ok.iter().map(|o| o.var[j])))
        .collect();
    let orig_empirical_var = (0..dim)
        .map(|j| sample_var(ok.iter().map(move |o| o.orig[j])))
        .collect();
    let orig_estimated_var = (0..dim)
        .map(|j| mean(ok.iter().map(|o| o.orig_var[j])))
        .collect();

    let total_obs: usize = ok.iter().map(|o| o.n_obs).sum();
    let score_mean_z = (0..dim)
        .map(|j| {
            let s: f64 = ok.iter().map(|o| o.score_sum[j]).sum();
            let s2: f64 = ok.iter().map(|o| o.score_sq[j]).sum();
            let nf = total_obs as f64;
            let mu = s / nf;
            let var = (s2 / nf - mu * mu) * nf / (nf - 1.0);
            mu / (var / nf).sqrt()
        })
        .collect();

    Ok(McReport {
        model: kind,
        n: dgp.n,
        n_reps,
        seed: dgp.seed,
        theta0: theta0.clone(),
        rep_index,
        estimates: ok.iter().map(|o| o.theta.clone()).collect(),
        standardized: ok.iter().map(|o| o.z.clone()).collect(),
        failures,
        failure_rate,
        flagged: failure_rate > MAX_FAILURE_RATE,
        ks_stats,
        ks_pvalues,
        ks_pvalues_bonferroni,
        ci_coverage,
        rmse,
        rmse_coords,
        theta_empirical_var,
        theta_estimated_var,
        orig_empirical_var,
        orig_estimated_var,
        info_eq_rel_err: mean(ok.iter().map(|o| o.info_rel)),
        score_mean_z,
    })
}

impl McReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Per-replication estimates as CSV: `rep`, the `θ̂` coordinates, then
    /// their standardized values.
    pub fn write_estimates_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.theta0.dim();
        let mut header = vec!["rep".to_string()];
        header.extend((1..dim).map(|j| format!("delta{j}")));
        header.push("gamma".into());
        header.extend((1..dim).map(|j| format!("z_delta{j}")));
        header.push("z_gamma".into());
        writeln!(w, "{}", header.join(","))?;
        for ((r, est), z) in self
            .rep_index
            .iter()
            .zip(&self.estimates)
            .zip(&self.standardized)
        {
            let fields: Vec<String> = std::iter::once(r.to_string())
                .chain(est.iter().chain(z).map(|v| v.to_string()))
                .collect();
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn max_coverage_gap(&self) -> f64 {
        self.ci_coverage
            .iter()
            .fold(0.0_f64, |a, c| a.max((c - 0.95).abs()))
    }

    pub fn min_ks_pvalue_bonferroni(&self) -> f64 {
        self.ks_pvalues_bonferroni
            .iter()
            .fold(1.0_f64, |a, &p| a.min(p))
    }
}
