//! Truncated regression: only draws with `y > c` enter the sample.

use nalgebra::{DMatrix, DVector};

use super::{ObsTerms, ScoreHessian};
use crate::data::{Observation, ReparamPoint};
use crate::error::{Error, Result};
use crate::special::{
    log_survival_unchecked, mills_delta_complement_unchecked, mills_delta_unchecked,
    mills_ratio_unchecked, LN_SQRT_2PI,
};

pub(crate) fn terms(y: f64, x: &[f64], p: &ReparamPoint, c: f64) -> ObsTerms {
    let xd = p.index(x);
    let resid = p.gamma * y - xd;
    let v = p.gamma * c - xd;
    ObsTerms {
        loglik: -LN_SQRT_2PI + p.gamma.ln() - 0.5 * resid * resid - log_survival_unchecked(v),
        score_a: resid,
        score_b: -mills_ratio_unchecked(v),
        score_last: 1.0 / p.gamma,
        hess_a: -1.0,
        hess_b: mills_delta_unchecked(v),
        hess_last: -1.0 / (p.gamma * p.gamma),
    }
}

fn validate(obs: &Observation<'_>, p: &ReparamPoint, c: f64) -> Result<()> {
    if !(p.gamma > 0.0) {
        return Err(Error::Domain {
            what: "gamma",
            value: p.gamma,
        });
    }
    if obs.x.len() != p.k() {
        return Err(Error::Dimension(format!(
            "{} regressors against {} coefficients",
            obs.x.len(),
            p.k()
        )));
    }
    if !c.is_finite() || !obs.y.is_finite() || obs.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0 });
    }
    if obs.y <= c {
        return Err(Error::TruncationViolation {
            row: 0,
            y: obs.y,
            c,
        });
    }
    Ok(())
}

/// Reparameterized log conditional density of one truncated draw.
pub fn loglik_obs(obs: Observation<'_>, p: &ReparamPoint, c: f64) -> Result<f64> {
    validate(&obs, p, c)?;
    Ok(terms(obs.y, obs.x, p, c).loglik)
}

/// Gradient of [`loglik_obs`] in `(δ, γ)`.
pub fn score_obs(obs: Observation<'_>, p: &ReparamPoint, c: f64) -> Result<DVector<f64>> {
    validate(&obs, p, c)?;
    Ok(terms(obs.y, obs.x, p, c).score(obs.x, obs.y, c))
}

/// Hessian of [`loglik_obs`] in `(δ, γ)`.
pub fn hessian_obs(obs: Observation<'_>, p: &ReparamPoint, c: f64) -> Result<DMatrix<f64>> {
    validate(&obs, p, c)?;
    Ok(terms(obs.y, obs.x, p, c).hessian(obs.x, obs.y, c))
}

pub fn score_hessian_obs(obs: Observation<'_>, p: &ReparamPoint, c: f64) -> Result<ScoreHessian> {
    validate(&obs, p, c)?;
    let t = terms(obs.y, obs.x, p, c);
    Ok(ScoreHessian {
        score: t.score(obs.x, obs.y, c),
        hessian: t.hessian(obs.x, obs.y, c),
        loglik: t.loglik,
    })
}

fn check_sigma(x_beta: f64, sigma: f64, c: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain {
            what: "sigma",
            value: sigma,
        });
    }
    if !x_beta.is_finite() || !c.is_finite() {
        return Err(Error::Domain {
            what: "x'beta and c",
            value: if x_beta.is_finite() { c } else { x_beta },
        });
    }
    Ok(())
}

/// `E[y | x, y > c] = x'β + σ·λ((c − x'β)/σ)`.
pub fn truncated_mean(x_beta: f64, sigma: f64, c: f64) -> Result<f64> {
    check_sigma(x_beta, sigma, c)?;
    Ok(x_beta + sigma * mills_ratio_unchecked((c - x_beta) / sigma))
}

/// `Var[y | x, y > c] = σ²·(1 − λ(v)(λ(v) − v))` with `v = (c − x'β)/σ`.
pub fn truncated_var(x_beta: f64, sigma: f64, c: f64) -> Result<f64> {
    check_sigma(x_beta, sigma, c)?;
    Ok(sigma * sigma * mills_delta_complement_unchecked((c - x_beta) / sigma))
}
