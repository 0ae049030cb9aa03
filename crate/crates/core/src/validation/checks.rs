//! Checks of the moment lemma and of the two conditions on the score at the
//! true parameters: mean zero and the information equality.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dgp::{fill_intercept_normal, TruncatedDraw};
use super::quadrature::{integrate_vec, Tolerance};
use super::{stream_rng, DgpConfig, RegressorSpec};
use crate::data::{dot, ModelKind, ReparamPoint};
use crate::error::{Error, Result};
use crate::model::tobit::{self, censor, truncated_moments};
use crate::model::{symmetric_from_upper, truncated, ObsTerms};
use crate::par::Exec;

/// Pass band for score-mean z-scores.
pub const SCORE_Z_BAND: f64 = 4.0;
/// Pass band for the information-equality gap, in Monte Carlo standard errors.
pub const INFO_EQ_SE_BAND: f64 = 3.0;

/// Upper integration length past the lower limit; `e^{−t²/2}` is below
/// `1e−340` there.
const TAIL_SPAN: f64 = 40.0;

fn oracle_tol() -> Tolerance {
    Tolerance {
        abs: 0.0,
        rel: 1e-14,
        max_intervals: 20_000,
    }
}

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `∫_a^∞ zⁱ φ(z) dz` for `i = 0..=4`, arranged so that every quadrature has
/// a positive integrand.
fn tail_moment_integrals(a: f64) -> Result<[f64; 5]> {
    let mut out = [0.0; 5];
    if a >= 0.0 {
        // z = a + t, φ(a + t) = φ(a)·e^{−at − t²/2}
        let v = integrate_vec(
            |t, o| {
                let w = (-a * t - 0.5 * t * t).exp();
                let z = a + t;
                let mut zi = 1.0;
                for slot in o.iter_mut() {
                    *slot = zi * w;
                    zi *= z;
                }
            },
            0.0,
            TAIL_SPAN,
            5,
            oracle_tol(),
        )?;
        let scale = phi(a);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = scale * vi;
        }
        return Ok(out);
    }
    // odd orders: the part over (a, −a) cancels by symmetry
    let reflected = tail_moment_integrals(-a)?;
    let from_zero = tail_moment_integrals(0.0)?;
    let near = integrate_vec(
        |z, o| {
            let w = phi(z);
            o[0] = w;
            o[1] = z * z * w;
            o[2] = z * z * z * z * w;
        },
        a,
        0.0,
        3,
        oracle_tol(),
    )?;
    out[0] = near[0] + from_zero[0];
    out[1] = reflected[1];
    out[2] = near[1] + from_zero[2];
    out[3] = reflected[3];
    out[4] = near[2] + from_zero[4];
    Ok(out)
}

/// Truncated-normal moments `E[zⁱ | z > v]`, `i = 1..=4`, by quadrature.
pub fn quadrature_moments(v: f64) -> Result<[f64; 4]> {
    if !v.is_finite() {
        return Err(Error::Domain {
            what: "moment grid point",
            value: v,
        });
    }
    let t = tail_moment_integrals(v)?;
    Ok([t[1] / t[0], t[2] / t[0], t[3] / t[0], t[4] / t[0]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentLemmaReport {
    pub n_points: usize,
    pub max_rel_err: f64,
    pub worst_v: f64,
    /// Moment order (1 to 4) at which the worst error occurred.
    pub worst_order: usize,
}

/// Compares the closed-form truncated moments with quadrature on a grid and
/// reports the worst relative error.
pub fn check_moment_lemma(v_grid: &[f64]) -> Result<MomentLemmaReport> {
    let mut report = MomentLemmaReport {
        n_points: v_grid.len(),
        max_rel_err: 0.0,
        worst_v: f64::NAN,
        worst_order: 0,
    };
    for &v in v_grid {
        let closed = truncated_moments(v)?.as_array();
        let oracle = quadrature_moments(v)?;
        for (i, (m, q)) in closed.iter().zip(oracle).enumerate() {
            let err = ((m - q) / q).abs();
            if err > report.max_rel_err || report.worst_order == 0 {
                report.max_rel_err = err;
                report.worst_v = v;
                report.worst_order = i + 1;
            }
        }
    }
    Ok(report)
}

/// `E[s | x]` and `E[ss' + H | x]` at one regressor row, by quadrature.
/// Both vanish when `p` is the data-generating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalResiduals {
    pub score_mean: DVector<f64>,
    pub info_gap: DMatrix<f64>,
}

fn push_score_and_gap(t: &ObsTerms, x: &[f64], y: f64, c: f64, out: &mut [f64]) {
    let dim = x.len() + 1;
    let (s, rest) = out.split_at_mut(dim);
    t.score_into(x, y, c, s);
    let gap = &mut rest[..dim * dim];
    gap.iter_mut().for_each(|g| *g = 0.0);
    t.add_hessian_upper(x, y, c, gap);
    for i in 0..dim {
        for j in i..dim {
            gap[i * dim + j] += s[i] * s[j];
        }
    }
}

/// Quadrature of the conditional score identities given `x`, with the
/// outcome generated at `truth` and the kernels evaluated at `eval`.
pub fn conditional_identity_residuals(
    kind: ModelKind,
    x: &[f64],
    truth: &ReparamPoint,
    eval: &ReparamPoint,
    c: f64,
) -> Result<ConditionalResiduals> {
    let dim = x.len() + 1;
    let width = dim + dim * dim;
    let xd = truth.index(x);
    let v = truth.gamma * c - xd;
    let lo = v.max(-TAIL_SPAN);
    let hi = v.max(0.0) + TAIL_SPAN;
    // z = lo + t carries weight φ(lo)·e^{−lo·t − t²/2}; component 0 is the mass
    let raw = integrate_vec(
        |t, o| {
            let w = (-lo * t - 0.5 * t * t).exp();
            let z = lo + t;
            let y = (z + xd) / truth.gamma;
            let terms = match kind {
                ModelKind::Truncated => truncated::terms(y, x, eval, c),
                ModelKind::Tobit => tobit::terms(y, x, false, eval, c),
            };
            o[0] = w;
            push_score_and_gap(&terms, x, y, c, &mut o[1..]);
            for slot in &mut o[1..] {
                *slot *= w;
            }
        },
        0.0,
        hi - lo,
        width + 1,
        Tolerance {
            abs: 1e-15,
            rel: 1e-14,
            max_intervals: 20_000,
        },
    )?;
    let mut expect = vec![0.0; width];
    match kind {
        ModelKind::Truncated => {
            for (e, r) in expect.iter_mut().zip(&raw[1..]) {
                *e = r / raw[0];
            }
        }
        ModelKind::Tobit => {
            let scale = phi(lo);
            for (e, r) in expect.iter_mut().zip(&raw[1..]) {
                *e = scale * r;
            }
            let p_censored = tail_moment_integrals(-v)?[0];
            let cens = tobit::terms(c, x, true, eval, c);
            let mut buf = vec![0.0; width];
            push_score_and_gap(&cens, x, c, c, &mut buf);
            for (e, b) in expect.iter_mut().zip(buf) {
                *e += p_censored * b;
            }
        }
    }
    Ok(ConditionalResiduals {
        score_mean: DVector::from_column_slice(&expect[..dim]),
        info_gap: symmetric_from_upper(dim, &expect[dim..]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeanReport {
    pub n_mc: usize,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub z: Vec<f64>,
    pub max_abs_z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoEqReport {
    pub n_mc: usize,
    /// `‖avg(ss') + avg(H)‖_F / ‖avg(ss')‖_F`
    pub rel_frobenius_err: f64,
    /// `‖avg(ss') + avg(H)‖_F`
    pub gap_frobenius: f64,
    /// `√Σ se²` over all entries: the scale of the gap norm under the null.
    pub gap_std_err: f64,
    /// Entrywise z-scores of the gap, row-major.
    pub z: Vec<Vec<f64>>,
    pub max_abs_z: f64,
    pub pass: bool,
}

struct McPartial {
    n: usize,
    score: Vec<f64>,
    score_sq: Vec<f64>,
    opg: Vec<f64>,
    gap: Vec<f64>,
    gap_sq: Vec<f64>,
}

const MC_CHUNK: usize = 16_384;
/// Stream offset keeping condition-3 draws apart from replication streams.
const MC_STREAM_BASE: u64 = 1 << 40;

fn mc_sums(
    kind: ModelKind,
    dgp: &DgpConfig,
    n_mc: usize,
    eval: &ReparamPoint,
    exec: Exec,
) -> Result<McPartial> {
    dgp.validate()?;
    if n_mc < 2 {
        return Err(Error::Config("n_mc must be at least 2".into()));
    }
    if eval.k() != dgp.k() {
        return Err(Error::Dimension(
            "evaluation point does not match beta0".into(),
        ));
    }
    let k = dgp.k();
    let dim = k + 1;
    let width = dim * dim;
    let parts = exec.map_chunks(n_mc, MC_CHUNK, |range| -> Result<McPartial> {
        let mut rng = stream_rng(dgp.seed, MC_STREAM_BASE + (range.start / MC_CHUNK) as u64);
        let mut part = McPartial {
            n: range.len(),
            score: vec![0.0; dim],
            score_sq: vec![0.0; dim],
            opg: vec![0.0; width],
            gap: vec![0.0; width],
            gap_sq: vec![0.0; width],
        };
        let mut row = vec![0.0; k];
        let mut buf = vec![0.0; dim + width];
        let mut draw = TruncatedDraw { attempts: 0 };
        for t in range {
            let (y, censored) = match (&dgp.regressors, kind) {
                (RegressorSpec::InterceptNormal, ModelKind::Truncated) => {
                    (draw.next(&mut rng, dgp, &mut row)?, false)
                }
                (spec, _) => {
                    match spec {
                        RegressorSpec::InterceptNormal => fill_intercept_normal(&mut rng, &mut row),
                        RegressorSpec::Matrix { rows, .. } => {
                            let r = t % dgp.n;
                            row.copy_from_slice(&rows[r * k..(r + 1) * k]);
                        }
                    }
                    let mean = dot(&row, &dgp.beta0);
                    if kind == ModelKind::Truncated {
                        let y =
                            super::dgp::sample_truncated_normal(&mut rng, mean, dgp.sigma0, dgp.c)?;
                        (y, false)
                    } else {
                        let eps: f64 = rng.sample(StandardNormal);
                        censor(mean + dgp.sigma0 * eps, dgp.c)
                    }
                }
            };
            let terms = match kind {
                ModelKind::Truncated => truncated::terms(y, &row, eval, dgp.c),
                ModelKind::Tobit => tobit::terms(y, &row, censored, eval, dgp.c),
            };
            push_score_and_gap(&terms, &row, y, dgp.c, &mut buf);
            let (s, gap) = buf.split_at(dim);
            for i in 0..dim {
                part.score[i] += s[i];
                part.score_sq[i] += s[i] * s[i];
                for j in i..dim {
                    let idx = i * dim + j;
                    part.opg[idx] += s[i] * s[j];
                    part.gap[idx] += gap[idx];
                    part.gap_sq[idx] += gap[idx] * gap[idx];
                }
            }
        }
        Ok(part)
    });
    let mut total = McPartial {
        n: 0,
        score: vec![0.0; dim],
        score_sq: vec![0.0; dim],
        opg: vec![0.0; width],
        gap: vec![0.0; width],
        gap_sq: vec![0.0; width],
    };
    for part in parts {
        let part = part?;
        total.n += part.n;
        for (a, b) in [
            (&mut total.score, &part.score),
            (&mut total.score_sq, &part.score_sq),
            (&mut total.opg, &part.opg),
            (&mut total.gap, &part.gap),
            (&mut total.gap_sq, &part.gap_sq),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    Ok(total)
}

fn mean_and_se(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn score_report(m: &McPartial) -> ScoreMeanReport {
    let (mut mean, mut std_err, mut z) = (vec![], vec![], vec![]);
    for i in 0..m.score.len() {
        let (mu, se) = mean_and_se(m.score[i], m.score_sq[i], m.n);
        mean.push(mu);
        std_err.push(se);
        z.push(mu / se);
    }
    let max_abs_z = z.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    ScoreMeanReport {
        n_mc: m.n,
        mean,
        std_err,
        z,
        max_abs_z,
        pass: max_abs_z <= SCORE_Z_BAND,
    }
}

#[allow(clippy::needless_range_loop)] // packed upper-triangle indexing
fn info_report(m: &McPartial) -> InfoEqReport {
    let dim = m.score.len();
    let mut z = vec![vec![0.0; dim]; dim];
    let (mut gap_sq_norm, mut se_sq_norm, mut opg_sq_norm) = (0.0, 0.0, 0.0);
    let mut max_abs_z = 0.0_f64;
    for i in 0..dim {
        for j in 0..dim {
            let idx = if i <= j { i * dim + j } else { j * dim + i };
            let (mu, se) = mean_and_se(m.gap[idx], m.gap_sq[idx], m.n);
            let opg = m.opg[idx] / m.n as f64;
            gap_sq_norm += mu * mu;
            se_sq_norm += se * se;
            opg_sq_norm += opg * opg;
            z[i][j] = mu / se;
            max_abs_z = max_abs_z.max(z[i][j].abs());
        }
    }
    let gap_frobenius = gap_sq_norm.sqrt();
    let gap_std_err = se_sq_norm.sqrt();
    InfoEqReport {
        n_mc: m.n,
        rel_frobenius_err: gap_frobenius / opg_sq_norm.sqrt(),
        gap_frobenius,
        gap_std_err,
        z,
        max_abs_z,
        pass: gap_frobenius <= INFO_EQ_SE_BAND * gap_std_err,
    }
}

/// Monte Carlo mean of the score over `n_mc` fresh draws from `dgp`,
/// evaluated at `eval` (the truth when `None`).
pub fn check_score_mean(
    kind: ModelKind,
    dgp: &DgpConfig,
    n_mc: usize,
    eval: Option<&ReparamPoint>,
    exec: Exec,
) -> Result<ScoreMeanReport> {
    let truth = dgp.truth();
    let sums = mc_sums(kind, dgp, n_mc, eval.unwrap_or(&truth), exec)?;
    Ok(score_report(&sums))
}

/// Monte Carlo comparison of `avg(ss')` and `−avg(H)` over `n_mc` fresh
/// draws, evaluated at `eval` (the truth when `None`).
pub fn check_information_equality(
    kind: ModelKind,
    dgp: &DgpConfig,
    n_mc: usize,
    eval: Option<&ReparamPoint>,
    exec: Exec,
) -> Result<InfoEqReport> {
    let truth = dgp.truth();
    let sums = mc_sums(kind, dgp, n_mc, eval.unwrap_or(&truth), exec)?;
    Ok(info_report(&sums))
}

/// Both condition-3 checks from a single set of draws.
pub fn check_condition_three(
    kind: ModelKind,
    dgp: &DgpConfig,
    n_mc: usize,
    eval: Option<&ReparamPoint>,
    exec: Exec,
) -> Result<(ScoreMeanReport, InfoEqReport)> {
    let truth = dgp.truth();
    let sums = mc_sums(kind, dgp, n_mc, eval.unwrap_or(&truth), exec)?;
    Ok((score_report(&sums), info_report(&sums)))
}
