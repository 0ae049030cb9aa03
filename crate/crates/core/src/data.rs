//! Datasets, observations and the reparameterized parameter point.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the band below `c` that is clamped to `c` when loading
/// censored data; anything further below is rejected.
pub const CENSOR_CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Only observations with `y > c` are sampled.
    Truncated,
    /// Latent outcome observed as `max(y*, c)`.
    Tobit,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Truncated => "truncated",
            ModelKind::Tobit => "tobit",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "truncated" => Ok(ModelKind::Truncated),
            "tobit" | "censored" => Ok(ModelKind::Tobit),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// A point in the `(δ, γ) = (β/σ, 1/σ)` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReparamPoint {
    pub delta: Vec<f64>,
    pub gamma: f64,
}

impl ReparamPoint {
    pub fn new(delta: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain {
                what: "gamma",
                value: gamma,
            });
        }
        if let Some(&bad) = delta.iter().find(|d| !d.is_finite()) {
            return Err(Error::Domain {
                what: "delta component",
                value: bad,
            });
        }
        Ok(Self { delta, gamma })
    }

    pub fn from_original(beta: &[f64], sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain {
                what: "sigma",
                value: sigma,
            });
        }
        Self::new(beta.iter().map(|b| b / sigma).collect(), 1.0 / sigma)
    }

    /// Stacks the point as `(δ₁, …, δ_K, γ)`.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.delta
                .iter()
                .copied()
                .chain(std::iter::once(self.gamma)),
        )
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        let (gamma, delta) = theta
            .split_last()
            .ok_or_else(|| Error::Dimension("empty parameter vector".into()))?;
        Self::new(delta.to_vec(), *gamma)
    }

    pub fn k(&self) -> usize {
        self.delta.len()
    }

    /// Number of free parameters, `K + 1`.
    pub fn dim(&self) -> usize {
        self.delta.len() + 1
    }

    pub fn beta(&self) -> Vec<f64> {
        self.delta.iter().map(|d| d / self.gamma).collect()
    }

    pub fn sigma(&self) -> f64 {
        1.0 / self.gamma
    }

    pub fn sigma2(&self) -> f64 {
        1.0 / (self.gamma * self.gamma)
    }

    /// `x'δ`
    #[inline]
    pub fn index(&self, x: &[f64]) -> f64 {
        dot(x, &self.delta)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// One draw from the truncated model.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub y: f64,
    pub x: &'a [f64],
}

/// One draw from the Tobit model. `censored` is the indicator `D_t`.
#[derive(Debug, Clone, Copy)]
pub struct CensoredObservation<'a> {
    pub y: f64,
    pub x: &'a [f64],
    pub censored: bool,
}

/// An immutable sample with row-major regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    kind: ModelKind,
    c: f64,
    k: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    censored: Vec<bool>,
    n_clamped: usize,
}

impl Dataset {
    /// Builds a validated dataset. `x` holds `y.len()` rows of `k` regressors.
    ///
    /// Truncated data must satisfy `y > c` on every row. Tobit data with `y`
    /// within `1e-9·max(1, |c|)` below `c` is clamped to `c`; anything lower
    /// is rejected. Rows are numbered from zero in errors.
    pub fn new(kind: ModelKind, c: f64, y: Vec<f64>, x: Vec<f64>, k: usize) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::Domain {
                what: "truncation/censoring point c",
                value: c,
            });
        }
        if k == 0 {
            return Err(Error::Dimension(
                "at least one regressor is required".into(),
            ));
        }
        if x.len() != y.len() * k {
            return Err(Error::Dimension(format!(
                "{} regressor values for {} rows of {} columns",
                x.len(),
                y.len(),
                k
            )));
        }
        let mut y = y;
        let mut censored = vec![false; y.len()];
        let mut n_clamped = 0;
        let clamp_band = CENSOR_CLAMP_TOL * c.abs().max(1.0);
        for (row, yt) in y.iter_mut().enumerate() {
            if !yt.is_finite() || x[row * k..(row + 1) * k].iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row });
            }
            match kind {
                ModelKind::Truncated => {
                    if *yt <= c {
                        return Err(Error::TruncationViolation { row, y: *yt, c });
                    }
                }
                ModelKind::Tobit => {
                    if *yt < c - clamp_band {
                        return Err(Error::BelowCensoringPoint { row, y: *yt, c });
                    }
                    if *yt < c {
                        log::warn!("row {row}: y = {yt} clamped to censoring point {c}");
                        *yt = c;
                        n_clamped += 1;
                    }
                    censored[row] = *yt <= c;
                }
            }
        }
        Ok(Self {
            kind,
            c,
            k,
            y,
            x,
            censored,
            n_clamped,
        })
    }

    pub fn from_rows(kind: ModelKind, c: f64, y: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if let Some(row) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::Dimension(format!(
                "row {row} has {} regressors, expected {k}",
                rows[row].len()
            )));
        }
        Self::new(kind, c, y, rows.concat(), k)
    }

    /// Builds Tobit data from explicit censoring flags, checking that each
    /// flag agrees with the outcome.
    pub fn tobit_with_flags(
        c: f64,
        y: Vec<f64>,
        x: Vec<f64>,
        k: usize,
        flags: &[bool],
    ) -> Result<Self> {
        let data = Self::new(ModelKind::Tobit, c, y, x, k)?;
        if flags.len() != data.n() {
            return Err(Error::Dimension("one censoring flag per row".into()));
        }
        if let Some(row) = (0..data.n()).find(|&t| flags[t] != data.censored[t]) {
            return Err(Error::InconsistentCensoring {
                row,
                y: data.y[row],
                c,
            });
        }
        Ok(data)
    }

    /// Returns a copy with a leading constant regressor.
    pub fn with_intercept(&self) -> Self {
        let k = self.k + 1;
        let mut x = Vec::with_capacity(self.n() * k);
        for row in self.x.chunks_exact(self.k) {
            x.push(1.0);
            x.extend_from_slice(row);
        }
        Self {
            k,
            x,
            ..self.clone()
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.x[t * self.k..(t + 1) * self.k]
    }

    #[inline]
    pub fn is_censored(&self, t: usize) -> bool {
        self.censored[t]
    }

    pub fn n_censored(&self) -> usize {
        self.censored.iter().filter(|&&d| d).count()
    }

    /// Number of Tobit outcomes that were clamped up to `c` at load.
    pub fn n_clamped(&self) -> usize {
        self.n_clamped
    }

    pub fn observation(&self, t: usize) -> Observation<'_> {
        Observation {
            y: self.y[t],
            x: self.row(t),
        }
    }

    pub fn censored_observation(&self, t: usize) -> CensoredObservation<'_> {
        CensoredObservation {
            y: self.y[t],
            x: self.row(t),
            censored: self.censored[t],
        }
    }
}
