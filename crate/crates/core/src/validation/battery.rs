//! The validation battery: every check with its pass band, in one report.

use serde::{Deserialize, Serialize};

use super::checks::{check_condition_three, check_moment_lemma, conditional_identity_residuals};
use super::normality::{normality_experiment_against, McReport, MAX_FAILURE_RATE};
use super::{perturbed_truth, DgpConfig};
use crate::data::ModelKind;
use crate::error::Result;
use crate::estimator::FitOptions;

pub const MOMENT_LEMMA_TOL: f64 = 1e-9;
pub const CONDITIONAL_SCORE_TOL: f64 = 1e-8;
pub const CONDITIONAL_INFO_TOL: f64 = 1e-7;
pub const KS_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub kind: ModelKind,
    pub dgp: DgpConfig,
    pub n_reps: usize,
    pub n_mc: usize,
    pub fit: FitOptions,
    /// Evaluate every check at the truth with `γ` doubled. The battery is
    /// then expected to fail.
    pub perturb_theta: bool,
}

impl BatteryConfig {
    pub fn new(kind: ModelKind, dgp: DgpConfig) -> Self {
        Self {
            kind,
            dgp,
            n_reps: 200,
            n_mc: 200_000,
            fit: FitOptions::default(),
            perturb_theta: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn at_most(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
            detail,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub config: BatteryConfig,
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
    pub replications: McReport,
}

/// Half-width of the coverage band for `reps` replications: three binomial
/// standard errors around 0.95, never tighter than 0.02.
pub fn coverage_half_width(reps: usize) -> f64 {
    (3.0 * (0.95 * 0.05 / reps as f64).sqrt()).max(0.02)
}

pub fn run_battery(cfg: &BatteryConfig) -> Result<ValidationReport> {
    cfg.dgp.validate()?;
    cfg.fit.validate()?;
    let truth = cfg.dgp.truth();
    let eval = if cfg.perturb_theta {
        perturbed_truth(&truth)
    } else {
        truth.clone()
    };
    let mut checks = Vec::new();

    let grid: Vec<f64> = (0..=320).map(|i| -8.0 + 0.05 * i as f64).collect();
    let lemma = check_moment_lemma(&grid)?;
    checks.push(CheckOutcome::at_most(
        "moment_lemma",
        lemma.max_rel_err,
        MOMENT_LEMMA_TOL,
        format!(
            "worst at v = {}, order {}",
            lemma.worst_v, lemma.worst_order
        ),
    ));

    let x_cells: Vec<Vec<f64>> = [-2.0, -0.5, 0.0, 1.0, 2.5]
        .iter()
        .map(|&z| {
            let mut x = vec![0.0; cfg.dgp.k()];
            x[0] = 1.0;
            for v in x.iter_mut().skip(1) {
                *v = z;
            }
            x
        })
        .collect();
    let (mut worst_score, mut worst_info) = (0.0_f64, 0.0_f64);
    for x in &x_cells {
        let r = conditional_identity_residuals(cfg.kind, x, &truth, &eval, cfg.dgp.c)?;
        worst_score = worst_score.max(r.score_mean.amax());
        worst_info = worst_info.max(r.info_gap.amax());
    }
    checks.push(CheckOutcome::at_most(
        "conditional_score_mean",
        worst_score,
        CONDITIONAL_SCORE_TOL,
        format!("max |E[s|x]| over {} regressor cells", x_cells.len()),
    ));
    checks.push(CheckOutcome::at_most(
        "conditional_information_equality",
        worst_info,
        CONDITIONAL_INFO_TOL,
        format!("max |E[ss' + H|x]| over {} regressor cells", x_cells.len()),
    ));

    let (score, info) =
        check_condition_three(cfg.kind, &cfg.dgp, cfg.n_mc, Some(&eval), cfg.fit.exec)?;
    checks.push(CheckOutcome::at_most(
        "mc_score_mean",
        score.max_abs_z,
        super::checks::SCORE_Z_BAND,
        format!("z = {:?}", score.z),
    ));
    checks.push(CheckOutcome::at_most(
        "mc_information_equality",
        info.gap_frobenius / info.gap_std_err,
        super::checks::INFO_EQ_SE_BAND,
        format!("relative Frobenius error {:.3e}", info.rel_frobenius_err),
    ));

    let mc = normality_experiment_against(cfg.kind, &cfg.dgp, cfg.n_reps, &cfg.fit, &eval)?;
    checks.push(CheckOutcome::at_least(
        "ks_normality",
        mc.min_ks_pvalue_bonferroni(),
        KS_ALPHA,
        format!(
            "Bonferroni-adjusted p-values {:?}",
            mc.ks_pvalues_bonferroni
        ),
    ));
    checks.push(CheckOutcome::at_most(
        "ci_coverage",
        mc.max_coverage_gap(),
        coverage_half_width(mc.standardized.len()),
        format!("coverage {:?}", mc.ci_coverage),
    ));
    checks.push(CheckOutcome::at_most(
        "replication_failures",
        mc.failure_rate,
        MAX_FAILURE_RATE,
        format!("{} of {} failed", mc.failures.len(), mc.n_reps),
    ));

    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport {
        config: cfg.clone(),
        checks,
        pass,
        replications: mc,
    })
}
