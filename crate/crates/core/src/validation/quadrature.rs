//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.
//!
//! Oracle code: it is used to cross-check closed forms and never sits on the
//! estimation path.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-13,
            max_intervals: 20_000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn kronrod<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Segment
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k15 = vec![0.0; dim];
    let mut g7 = vec![0.0; dim];
    f(center, buf);
    for d in 0..dim {
        k15[d] = WGK[7] * buf[d];
        g7[d] = WG[3] * buf[d];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        for x in [center - dx, center + dx] {
            f(x, buf);
            for d in 0..dim {
                k15[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    g7[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let mut error = 0.0_f64;
    for d in 0..dim {
        k15[d] *= half;
        g7[d] *= half;
        error = error.max((k15[d] - g7[d]).abs());
    }
    Segment {
        a,
        b,
        value: k15,
        error,
    }
}

/// Integrates every component of `f` over `[a, b]`, bisecting the segment
/// with the largest error until the summed error estimate is below
/// `max(tol.abs, tol.rel·max|I_d|)`.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, dim: usize, tol: Tolerance) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]),
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature("infinite integration limits".into()));
    }
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    let mut buf = vec![0.0; dim];
    let mut segments = vec![kronrod(&mut f, a, b, dim, &mut buf)];
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for s in &segments {
            for (t, v) in total.iter_mut().zip(&s.value) {
                *t += v;
            }
            err += s.error;
        }
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if err <= tol.abs.max(tol.rel * scale) {
            return Ok(total);
        }
        if segments.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {err:e} after {} intervals",
                segments.len()
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            return Err(Error::Quadrature(
                "interval collapsed below resolution".into(),
            ));
        }
        segments.push(kronrod(&mut f, s.a, mid, dim, &mut buf));
        segments.push(kronrod(&mut f, mid, s.b, dim, &mut buf));
    }
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_vec(|x, out| out[0] = f(x), a, b, 1, tol).map(|v| v[0])
}
