//! The Tobit (censored regression) model.
//!
//! The censored branch contributes `+log Φ(γc − x'δ)`. This is the sign for
//! which the score and Hessian below are the exact derivatives; the
//! finite-difference tests pin it down.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ObsTerms, ScoreHessian};
use crate::data::{CensoredObservation, ReparamPoint};
use crate::error::{Error, Result};
use crate::special::{
    log_survival_unchecked, mills_delta_unchecked, mills_ratio_unchecked, LN_SQRT_2PI,
};

/// `y = max(y*, c)` together with the censoring indicator.
pub fn censor(y_star: f64, c: f64) -> (f64, bool) {
    if y_star > c {
        (y_star, false)
    } else {
        (c, true)
    }
}

pub(crate) fn terms(y: f64, x: &[f64], censored: bool, p: &ReparamPoint, c: f64) -> ObsTerms {
    let xd = p.index(x);
    if censored {
        let v = p.gamma * c - xd;
        ObsTerms {
            loglik: log_survival_unchecked(-v),
            score_b: -mills_ratio_unchecked(-v),
            // λ(−v)[λ(−v) + v]
            hess_b: -mills_delta_unchecked(-v),
            ..ObsTerms::default()
        }
    } else {
        let resid = p.gamma * y - xd;
        ObsTerms {
            loglik: -LN_SQRT_2PI + p.gamma.ln() - 0.5 * resid * resid,
            score_a: resid,
            score_last: 1.0 / p.gamma,
            hess_a: -1.0,
            hess_last: -1.0 / (p.gamma * p.gamma),
            ..ObsTerms::default()
        }
    }
}

fn validate(obs: &CensoredObservation<'_>, p: &ReparamPoint, c: f64) -> Result<()> {
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
    let consistent = if obs.censored { obs.y == c } else { obs.y > c };
    if !consistent {
        return Err(Error::InconsistentCensoring {
            row: 0,
            y: obs.y,
            c,
        });
    }
    Ok(())
}

/// Reparameterized log conditional likelihood of one Tobit observation.
pub fn loglik_obs(obs: CensoredObservation<'_>, p: &ReparamPoint, c: f64) -> Result<f64> {
    validate(&obs, p, c)?;
    Ok(terms(obs.y, obs.x, obs.censored, p, c).loglik)
}

pub fn score_obs(obs: CensoredObservation<'_>, p: &ReparamPoint, c: f64) -> Result<DVector<f64>> {
    validate(&obs, p, c)?;
    Ok(terms(obs.y, obs.x, obs.censored, p, c).score(obs.x, obs.y, c))
}

pub fn hessian_obs(obs: CensoredObservation<'_>, p: &ReparamPoint, c: f64) -> Result<DMatrix<f64>> {
    validate(&obs, p, c)?;
    Ok(terms(obs.y, obs.x, obs.censored, p, c).hessian(obs.x, obs.y, c))
}

pub fn score_hessian_obs(
    obs: CensoredObservation<'_>,
    p: &ReparamPoint,
    c: f64,
) -> Result<ScoreHessian> {
    validate(&obs, p, c)?;
    let t = terms(obs.y, obs.x, obs.censored, p, c);
    Ok(ScoreHessian {
        score: t.score(obs.x, obs.y, c),
        hessian: t.hessian(obs.x, obs.y, c),
        loglik: t.loglik,
    })
}

/// Moments of a standard normal `z` conditional on `z > v`, orders 1 to 4.
///
/// At the true parameters `γy − x'δ` is standard normal and `y > c` is the
/// event `z > v`, so these are the uncensored-branch moments that drive the
/// information equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl TruncatedMoments {
    pub fn as_array(&self) -> [f64; 4] {
        [self.m1, self.m2, self.m3, self.m4]
    }
}

pub fn truncated_moments(v: f64) -> Result<TruncatedMoments> {
    if !v.is_finite() {
        return Err(Error::Domain {
            what: "truncated_moments argument",
            value: v,
        });
    }
    let lam = mills_ratio_unchecked(v);
    let m2 = v * lam + 1.0;
    Ok(TruncatedMoments {
        m1: lam,
        m2,
        m3: v * v * lam + 2.0 * lam,
        m4: v * v * v * lam + 3.0 * m2,
    })
}
