use limdep::{FitResult, ModelKind};
use nalgebra::DMatrix;
use serde::Serialize;

pub const FIT_SCHEMA: &str = "limdep/fit-report/v1";
pub const SIMULATE_SCHEMA: &str = "limdep/simulate-sidecar/v1";
pub const VALIDATE_SCHEMA: &str = "limdep/validation-report/v1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub schema: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub model: ModelKind,
    pub c: f64,
    pub n: usize,
    pub k: usize,
    pub n_censored: usize,
    pub n_clamped: usize,
    pub regressors: Vec<String>,
    pub converged: bool,
    pub n_iter: usize,
    pub avg_score_norm: f64,
    pub loglik: f64,
    pub avg_loglik: f64,
    /// `(δ̂, γ̂)`
    pub theta: Vec<f64>,
    pub se_theta: Option<Vec<f64>>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub se_beta_sigma2: Option<Vec<f64>>,
    pub avar_hessian: Option<Vec<Vec<f64>>>,
    pub avar_opg: Option<Vec<Vec<f64>>>,
    pub cov_beta_sigma2: Option<Vec<Vec<f64>>>,
    pub min_eig_neg_avg_hessian: f64,
}

impl FitReport {
    pub fn new(
        f: &FitResult,
        c: f64,
        regressors: Vec<String>,
        n_censored: usize,
        n_clamped: usize,
        seed: u64,
    ) -> Self {
        let n = f.n as f64;
        let se_theta = f
            .avar_hessian
            .as_ref()
            .map(|a| a.diagonal().iter().map(|v| (v / n).sqrt()).collect());
        let orig = f.orig.as_ref();
        Self {
            schema: FIT_SCHEMA,
            version: VERSION,
            seed,
            model: f.model,
            c,
            n: f.n,
            k: f.theta_hat.k(),
            n_censored,
            n_clamped,
            regressors,
            converged: f.converged,
            n_iter: f.n_iter,
            avg_score_norm: f.avg_score_norm,
            loglik: f.loglik,
            avg_loglik: f.avg_loglik(),
            theta: f.theta_hat.to_vector().iter().copied().collect(),
            se_theta,
            beta: f.theta_hat.beta(),
            sigma2: f.theta_hat.sigma2(),
            se_beta_sigma2: orig.map(|o| o.cov.diagonal().iter().map(|v| v.sqrt()).collect()),
            avar_hessian: f.avar_hessian.as_ref().map(rows),
            avar_opg: f.avar_opg.as_ref().map(rows),
            cov_beta_sigma2: orig.map(|o| rows(&o.cov)),
            min_eig_neg_avg_hessian: f.min_eig_neg_avg_hessian,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimulateSidecar {
    pub schema: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub model: ModelKind,
    pub n: usize,
    pub c: f64,
    pub beta: Vec<f64>,
    pub sigma: f64,
    /// The truth in `(δ, γ)` coordinates.
    pub theta: Vec<f64>,
    pub n_censored: usize,
    pub columns: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport<'a> {
    pub schema: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub pass: bool,
    pub failing_checks: Vec<&'a str>,
    #[serde(flatten)]
    pub report: &'a limdep::validation::ValidationReport,
}
