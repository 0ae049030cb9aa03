//! Per-observation likelihood kernels for the two models and their
//! sample-level aggregation.
//!
//! Both models share the same algebraic shape. With `a = [x; −y]`,
//! `b = [x; −c]` and `e_K` the last unit vector, every per-observation score
//! and Hessian can be written
//!
//! ```text
//! s = σa·a + σb·b + σγ·e_K
//! H = ηa·aa' + ηb·bb' + ηγ·e_K e_K'
//! ```
//!
//! for scalars that depend on the observation only through `γy − x'δ` and
//! `v = γc − x'δ`. [`ObsTerms`] carries those scalars; the public functions in
//! [`truncated`] and [`tobit`] expand them into dense vectors and matrices.

pub mod tobit;
pub mod truncated;

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, ModelKind, ReparamPoint};
use crate::par::Exec;

/// Score, Hessian and log-likelihood of one observation (or a sum of them).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHessian {
    pub score: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub loglik: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ObsTerms {
    pub loglik: f64,
    pub score_a: f64,
    pub score_b: f64,
    pub score_last: f64,
    pub hess_a: f64,
    pub hess_b: f64,
    pub hess_last: f64,
}

impl ObsTerms {
    pub fn score_into(&self, x: &[f64], y: f64, c: f64, out: &mut [f64]) {
        let k = x.len();
        let w = self.score_a + self.score_b;
        for (o, xi) in out[..k].iter_mut().zip(x) {
            *o = w * xi;
        }
        out[k] = -self.score_a * y - self.score_b * c + self.score_last;
    }

    /// Adds this observation's Hessian into the upper triangle of a
    /// row-major `(K+1)×(K+1)` buffer.
    pub fn add_hessian_upper(&self, x: &[f64], y: f64, c: f64, h: &mut [f64]) {
        let k = x.len();
        let dim = k + 1;
        let w = self.hess_a + self.hess_b;
        let cross = -(self.hess_a * y + self.hess_b * c);
        for i in 0..k {
            let wxi = w * x[i];
            let row = &mut h[i * dim..(i + 1) * dim];
            for j in i..k {
                row[j] += wxi * x[j];
            }
            row[k] += cross * x[i];
        }
        h[k * dim + k] += self.hess_a * y * y + self.hess_b * c * c + self.hess_last;
    }

    pub fn score(&self, x: &[f64], y: f64, c: f64) -> DVector<f64> {
        let mut out = DVector::zeros(x.len() + 1);
        self.score_into(x, y, c, out.as_mut_slice());
        out
    }

    pub fn hessian(&self, x: &[f64], y: f64, c: f64) -> DMatrix<f64> {
        let dim = x.len() + 1;
        let mut buf = vec![0.0; dim * dim];
        self.add_hessian_upper(x, y, c, &mut buf);
        symmetric_from_upper(dim, &buf)
    }
}

pub(crate) fn symmetric_from_upper(dim: usize, upper: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i <= j {
            upper[i * dim + j]
        } else {
            upper[j * dim + i]
        }
    })
}

/// Kernel dispatch for observation `t`; inputs are assumed validated.
#[inline]
pub(crate) fn terms_at(data: &Dataset, p: &ReparamPoint, t: usize) -> ObsTerms {
    let x = data.row(t);
    let y = data.y()[t];
    match data.kind() {
        ModelKind::Truncated => truncated::terms(y, x, p, data.c()),
        ModelKind::Tobit => tobit::terms(y, x, data.is_censored(t), p, data.c()),
    }
}

/// What [`evaluate`] should accumulate beyond the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Need {
    pub score: bool,
    pub hessian: bool,
    pub opg: bool,
}

impl Need {
    pub const LOGLIK: Need = Need {
        score: false,
        hessian: false,
        opg: false,
    };
    pub const DERIVATIVES: Need = Need {
        score: true,
        hessian: true,
        opg: false,
    };
    pub const ALL: Need = Need {
        score: true,
        hessian: true,
        opg: true,
    };
}

/// Sums over a sample. Averages are these divided by `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSums {
    pub n: usize,
    pub loglik: f64,
    pub score: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// `Σ s_t s_t'`; zero unless requested.
    pub opg: DMatrix<f64>,
}

impl SampleSums {
    pub fn avg_loglik(&self) -> f64 {
        self.loglik / self.n as f64
    }

    pub fn avg_score(&self) -> DVector<f64> {
        &self.score / self.n as f64
    }

    pub fn avg_hessian(&self) -> DMatrix<f64> {
        &self.hessian / self.n as f64
    }

    pub fn avg_opg(&self) -> DMatrix<f64> {
        &self.opg / self.n as f64
    }
}

struct Partial {
    loglik: f64,
    score: Vec<f64>,
    hess: Vec<f64>,
    opg: Vec<f64>,
}

/// Observations per work unit. Fixed so that the reduction order, and hence
/// every bit of the result, does not depend on the execution strategy.
const CHUNK: usize = 512;

/// Accumulates log-likelihood and, on request, score, Hessian and outer
/// product of scores over the whole sample at `p`.
///
/// `p` must have `data.k()` slope components.
pub fn evaluate(data: &Dataset, p: &ReparamPoint, need: Need, exec: Exec) -> SampleSums {
    assert_eq!(p.k(), data.k(), "parameter and regressor dimensions differ");
    let dim = data.k() + 1;
    let c = data.c();
    let partials = exec.map_chunks(data.n(), CHUNK, |range| {
        let mut part = Partial {
            loglik: 0.0,
            score: vec![0.0; if need.score || need.opg { dim } else { 0 }],
            hess: vec![0.0; if need.hessian { dim * dim } else { 0 }],
            opg: vec![0.0; if need.opg { dim * dim } else { 0 }],
        };
        let mut s = vec![0.0; dim];
        for t in range {
            let terms = terms_at(data, p, t);
            part.loglik += terms.loglik;
            if !(need.score || need.opg || need.hessian) {
                continue;
            }
            let x = data.row(t);
            let y = data.y()[t];
            if need.score || need.opg {
                terms.score_into(x, y, c, &mut s);
                for (acc, si) in part.score.iter_mut().zip(&s) {
                    *acc += si;
                }
            }
            if need.opg {
                for i in 0..dim {
                    let si = s[i];
                    let row = &mut part.opg[i * dim..(i + 1) * dim];
                    for j in i..dim {
                        row[j] += si * s[j];
                    }
                }
            }
            if need.hessian {
                terms.add_hessian_upper(x, y, c, &mut part.hess);
            }
        }
        part
    });

    let mut loglik = 0.0;
    let mut score = vec![0.0; dim];
    let mut hess = vec![0.0; dim * dim];
    let mut opg = vec![0.0; dim * dim];
    for part in &partials {
        loglik += part.loglik;
        add_into(&mut score, &part.score);
        add_into(&mut hess, &part.hess);
        add_into(&mut opg, &part.opg);
    }
    SampleSums {
        n: data.n(),
        loglik,
        score: DVector::from_vec(score),
        hessian: symmetric_from_upper(dim, &hess),
        opg: symmetric_from_upper(dim, &opg),
    }
}

fn add_into(acc: &mut [f64], part: &[f64]) {
    for (a, p) in acc.iter_mut().zip(part) {
        *a += p;
    }
}

/// Average log-likelihood, the estimation objective.
pub fn avg_loglik(data: &Dataset, p: &ReparamPoint, exec: Exec) -> f64 {
    evaluate(data, p, Need::LOGLIK, exec).avg_loglik()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_sums_are_bit_identical() {
        let n = 3000;
        let y: Vec<f64> = (0..n)
            .map(|t| 0.1 + (t as f64 * 0.37).sin().abs())
            .collect();
        let x: Vec<f64> = (0..n)
            .flat_map(|t| [1.0, (t as f64 * 0.11).cos()])
            .collect();
        let data = Dataset::new(ModelKind::Truncated, 0.0, y, x, 2).unwrap();
        let p = ReparamPoint::new(vec![0.3, -0.2], 1.4).unwrap();
        let a = evaluate(&data, &p, Need::ALL, Exec::Sequential);
        let b = evaluate(&data, &p, Need::ALL, Exec::Parallel);
        assert_eq!(a, b);
    }
}
