//! Simulation of truncated and Tobit samples.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{stream_rng, DgpConfig, RegressorSpec};
use crate::data::{dot, Dataset, ModelKind};
use crate::error::{Error, Result};
use crate::model::tobit::censor;
use crate::special::{log_survival_unchecked, upper_tail_quantile_ln_unchecked};

/// Below this inclusion probability a fixed regressor row is rejected.
const MIN_INCLUSION_PROB: f64 = 1e-6;

/// One draw from `N(mean, sigma²)` conditioned on exceeding `c`, by
/// inverting the survival function of the conditional tail.
///
/// `ln_tail` must be `log(1 − Φ((c − mean)/sigma))`.
pub(crate) fn draw_truncated<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    sigma: f64,
    c: f64,
    ln_tail: f64,
) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u == 0.0 {
            continue;
        }
        let z = upper_tail_quantile_ln_unchecked(u.ln() + ln_tail);
        let y = mean + sigma * z;
        // rounding can land exactly on c when the tail is very thin
        if y > c {
            return y;
        }
    }
}

/// Draws from `N(mean, sigma²)` truncated to `(c, ∞)`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    sigma: f64,
    c: f64,
) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) || !mean.is_finite() || !c.is_finite() {
        return Err(Error::Domain {
            what: "truncated normal parameters",
            value: sigma,
        });
    }
    let ln_tail = log_survival_unchecked((c - mean) / sigma);
    Ok(draw_truncated(rng, mean, sigma, c, ln_tail))
}

pub(crate) fn fill_intercept_normal<R: Rng + ?Sized>(rng: &mut R, row: &mut [f64]) {
    row[0] = 1.0;
    for v in &mut row[1..] {
        *v = rng.sample(StandardNormal);
    }
}

/// Accept-reject over regressors for random designs: a row is kept with
/// probability `P(y > c | x)`, which reproduces the joint law of the
/// included `(x, y)` exactly.
pub(crate) struct TruncatedDraw {
    pub attempts: u64,
}

impl TruncatedDraw {
    pub fn next<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        dgp: &DgpConfig,
        row: &mut [f64],
    ) -> Result<f64> {
        let start = self.attempts;
        loop {
            self.attempts += 1;
            fill_intercept_normal(rng, row);
            let mean = dot(row, &dgp.beta0);
            let ln_tail = log_survival_unchecked((dgp.c - mean) / dgp.sigma0);
            let u: f64 = rng.random();
            if u.ln() < ln_tail {
                return Ok(draw_truncated(rng, mean, dgp.sigma0, dgp.c, ln_tail));
            }
            if self.attempts - start > 1_000_000 {
                return Err(Error::PathologicalDgp(format!(
                    "no observation passed the truncation rule in {} draws (acceptance < {MIN_INCLUSION_PROB:e})",
                    self.attempts - start
                )));
            }
        }
    }
}

/// A sample of `dgp.n` observations satisfying `y > c`.
pub fn gen_truncated(dgp: &DgpConfig) -> Result<Dataset> {
    gen_truncated_stream(dgp, 0)
}

pub(crate) fn gen_truncated_stream(dgp: &DgpConfig, stream: u64) -> Result<Dataset> {
    dgp.validate()?;
    let k = dgp.k();
    let mut rng = stream_rng(dgp.seed, stream);
    let mut y = Vec::with_capacity(dgp.n);
    let mut x = vec![0.0; dgp.n * k];
    match &dgp.regressors {
        RegressorSpec::InterceptNormal => {
            let mut draw = TruncatedDraw { attempts: 0 };
            for row in x.chunks_exact_mut(k) {
                y.push(draw.next(&mut rng, dgp, row)?);
            }
        }
        RegressorSpec::Matrix { rows, .. } => {
            x.copy_from_slice(rows);
            for (t, row) in x.chunks_exact(k).enumerate() {
                let mean = dot(row, &dgp.beta0);
                let ln_tail = log_survival_unchecked((dgp.c - mean) / dgp.sigma0);
                if ln_tail < MIN_INCLUSION_PROB.ln() {
                    return Err(Error::PathologicalDgp(format!(
                        "row {t}: inclusion probability {:e} below {MIN_INCLUSION_PROB:e}",
                        ln_tail.exp()
                    )));
                }
                y.push(draw_truncated(&mut rng, mean, dgp.sigma0, dgp.c, ln_tail));
            }
        }
    }
    Dataset::new(ModelKind::Truncated, dgp.c, y, x, k)
}

/// A censored sample `y = max(x'β₀ + ε, c)`.
pub fn gen_tobit(dgp: &DgpConfig) -> Result<Dataset> {
    gen_tobit_stream(dgp, 0)
}

pub(crate) fn gen_tobit_stream(dgp: &DgpConfig, stream: u64) -> Result<Dataset> {
    dgp.validate()?;
    let k = dgp.k();
    let mut rng = stream_rng(dgp.seed, stream);
    let mut y = Vec::with_capacity(dgp.n);
    let mut x = vec![0.0; dgp.n * k];
    if let RegressorSpec::Matrix { rows, .. } = &dgp.regressors {
        x.copy_from_slice(rows);
    }
    for row in x.chunks_exact_mut(k) {
        if dgp.regressors == RegressorSpec::InterceptNormal {
            fill_intercept_normal(&mut rng, row);
        }
        let eps: f64 = rng.sample(StandardNormal);
        y.push(censor(dot(row, &dgp.beta0) + dgp.sigma0 * eps, dgp.c).0);
    }
    Dataset::new(ModelKind::Tobit, dgp.c, y, x, k)
}

pub fn gen_dataset(kind: ModelKind, dgp: &DgpConfig) -> Result<Dataset> {
    gen_dataset_stream(kind, dgp, 0)
}

pub(crate) fn gen_dataset_stream(kind: ModelKind, dgp: &DgpConfig, stream: u64) -> Result<Dataset> {
    match kind {
        ModelKind::Truncated => gen_truncated_stream(dgp, stream),
        ModelKind::Tobit => gen_tobit_stream(dgp, stream),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let dgp = DgpConfig::intercept_normal(vec![1.0, 0.5], 1.0, 0.0, 500, 42);
        assert_eq!(gen_truncated(&dgp).unwrap(), gen_truncated(&dgp).unwrap());
        assert_eq!(gen_tobit(&dgp).unwrap(), gen_tobit(&dgp).unwrap());
        assert_ne!(
            gen_tobit(&dgp).unwrap(),
            gen_tobit(&dgp.with_seed(43)).unwrap()
        );
    }

    #[test]
    fn truncated_rows_respect_the_rule() {
        let dgp = DgpConfig::intercept_normal(vec![-1.0, 0.5], 1.0, 0.5, 2000, 7);
        let d = gen_truncated(&dgp).unwrap();
        assert_eq!(d.n(), 2000);
        assert!(d.y().iter().all(|&y| y > 0.5));
    }

    #[test]
    fn impossible_truncation_is_pathological() {
        let dgp = DgpConfig::intercept_normal(vec![0.0], 1.0, 1e6, 10, 1);
        assert!(matches!(
            gen_truncated(&dgp),
            Err(Error::PathologicalDgp(_))
        ));
        let fixed = DgpConfig {
            regressors: RegressorSpec::Matrix {
                k: 1,
                rows: vec![1.0, 1.0, -10.0],
            },
            ..DgpConfig::intercept_normal(vec![1.0], 1.0, 0.0, 3, 1)
        };
        assert!(matches!(
            gen_truncated(&fixed),
            Err(Error::PathologicalDgp(e)) if e.starts_with("row 2")
        ));
    }

    #[test]
    fn deep_truncation_draws_stay_above_c() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..1000 {
            let y = sample_truncated_normal(&mut rng, 0.0, 1.0, 30.0).unwrap();
            assert!(y > 30.0 && y < 31.0);
        }
    }

    #[test]
    fn censoring_extremes() {
        let none = gen_tobit(&DgpConfig::intercept_normal(vec![0.0], 1.0, -1e6, 200, 5)).unwrap();
        assert_eq!(none.n_censored(), 0);
        let all = gen_tobit(&DgpConfig::intercept_normal(vec![0.0], 1.0, 1e6, 200, 5)).unwrap();
        assert_eq!(all.n_censored(), 200);
        assert!(all.y().iter().all(|&y| y == 1e6));
    }

    #[test]
    fn config_validation() {
        assert!(gen_tobit(&DgpConfig::intercept_normal(vec![0.0], 0.0, 0.0, 10, 1)).is_err());
        assert!(gen_tobit(&DgpConfig::intercept_normal(vec![0.0, 1.0], 1.0, 0.0, 3, 1)).is_err());
    }
}
