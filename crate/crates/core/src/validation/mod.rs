//! Monte Carlo and quadrature harness for the conditions behind the
//! asymptotic normality of the conditional ML estimator.
//!
//! * [`dgp`] simulates truncated and Tobit samples from known parameters.
//! * [`quadrature`] is an adaptive Gauss–Kronrod integrator used only as an
//!   oracle; the likelihood code never depends on it.
//! * [`checks`] holds the moment-lemma comparison, the conditional score and
//!   information identities by quadrature, and their Monte Carlo versions.
//! * [`normality`] runs the replication study and the KS machinery.
//! * [`battery`] strings the checks together with pass/fail bands.

pub mod battery;
pub mod checks;
pub mod dgp;
pub mod normality;
pub mod quadrature;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ReparamPoint;
use crate::error::{Error, Result};

pub use battery::{run_battery, BatteryConfig, CheckOutcome, ValidationReport};
pub use checks::{
    check_information_equality, check_moment_lemma, check_score_mean,
    conditional_identity_residuals, ConditionalResiduals, InfoEqReport, MomentLemmaReport,
    ScoreMeanReport,
};
pub use dgp::{gen_dataset, gen_tobit, gen_truncated, sample_truncated_normal};
pub use normality::{ks_pvalue, ks_statistic, normality_experiment, McReport};

/// How regressor rows are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorSpec {
    /// A constant first column followed by iid standard-normal columns.
    InterceptNormal,
    /// Fixed row-major rows, `k` per row, reused as given.
    Matrix { k: usize, rows: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub beta0: Vec<f64>,
    pub sigma0: f64,
    pub c: f64,
    pub regressors: RegressorSpec,
    pub n: usize,
    pub seed: u64,
}

impl DgpConfig {
    pub fn intercept_normal(beta0: Vec<f64>, sigma0: f64, c: f64, n: usize, seed: u64) -> Self {
        Self {
            beta0,
            sigma0,
            c,
            regressors: RegressorSpec::InterceptNormal,
            n,
            seed,
        }
    }

    pub fn k(&self) -> usize {
        self.beta0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Config(format!(
                "sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if self.beta0.is_empty() || self.beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config(
                "beta0 must be a non-empty finite vector".into(),
            ));
        }
        if !self.c.is_finite() {
            return Err(Error::Config("c must be finite".into()));
        }
        if self.n < self.k() + 2 {
            return Err(Error::Config(format!(
                "n = {} is too small for {} regressors",
                self.n,
                self.k()
            )));
        }
        if let RegressorSpec::Matrix { k, rows } = &self.regressors {
            if *k != self.k() || rows.len() != self.n * k {
                return Err(Error::Config(format!(
                    "regressor matrix must be {} x {}",
                    self.n,
                    self.k()
                )));
            }
        }
        Ok(())
    }

    /// The data-generating parameters in `(δ, γ)` coordinates.
    pub fn truth(&self) -> ReparamPoint {
        ReparamPoint {
            delta: self.beta0.iter().map(|b| b / self.sigma0).collect(),
            gamma: 1.0 / self.sigma0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }
}

/// The truth with `γ` doubled: the negative-control evaluation point.
pub fn perturbed_truth(truth: &ReparamPoint) -> ReparamPoint {
    ReparamPoint {
        delta: truth.delta.clone(),
        gamma: 2.0 * truth.gamma,
    }
}

/// Generator for stream `stream` of `seed`. Streams of one seed are
/// independent ChaCha keystreams, so replications never share draws.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
