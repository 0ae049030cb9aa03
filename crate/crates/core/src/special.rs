//! Standard-normal primitives and the inverse Mills ratio family.
//!
//! Everything here is built on W. J. Cody's rational Chebyshev approximations
//! for the scaled complementary error function `erfcx(x) = exp(x²)·erfc(x)`.
//! Working with the scaled function keeps the upper tail of the normal
//! distribution representable in log space far beyond the point where the
//! survival function itself underflows, and lets the hazard `φ/(1−Φ)` be
//! evaluated without ever forming `0/0`.
//!
//! The public functions reject non-finite arguments. Internal callers that
//! have already validated their inputs use the `*_unchecked` variants.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// `1/√(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `½·log(2π)`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// `√(2/π)`
#[cfg(test)]
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Above this argument the hazard is evaluated by continued fraction.
const MILLS_CF_THRESHOLD: f64 = 5.0;
/// Smallest value reported for the hazard once `φ(v)` underflows (v < −38.5).
const LAMBDA_FLOOR: f64 = f64::MIN_POSITIVE;

// Cody's coefficients: erf on |x| ≤ 0.46875.
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_16,
    377.485_237_685_302,
    3_209.377_589_138_469_5,
    0.185_777_706_184_603_15,
];
const ERF_B: [f64; 4] = [
    23.601_290_952_344_122,
    244.024_637_934_444_17,
    1_282.616_526_077_372_3,
    2_844.236_833_439_170_6,
];
// erfcx on 0.46875 < x ≤ 4.
const ERFC_C: [f64; 9] = [
    0.564_188_496_988_670_1,
    8.883_149_794_388_376,
    66.119_190_637_141_63,
    298.635_138_197_400_1,
    881.952_221_241_769,
    1_712.047_612_634_070_6,
    2_051.078_377_826_071_6,
    1_230.339_354_797_997_2,
    2.153_115_354_744_038_5e-8,
];
const ERFC_D: [f64; 8] = [
    15.744_926_110_709_835,
    117.693_950_891_312_5,
    537.181_101_862_009_9,
    1_621.389_574_566_690_2,
    3_290.799_235_733_459_6,
    4_362.619_090_143_247,
    3_439.367_674_143_721_6,
    1_230.339_354_803_749_4,
];
// erfcx on x > 4, in powers of 1/x².
const ERFC_P: [f64; 6] = [
    0.305_326_634_961_232_36,
    0.360_344_899_949_804_45,
    0.125_781_726_111_229_26,
    0.016_083_785_148_742_275,
    6.587_491_615_298_378e-4,
    0.016_315_387_137_302_097,
];
const ERFC_Q: [f64; 5] = [
    2.568_520_192_289_822,
    1.872_952_849_923_460_4,
    0.527_905_102_951_428_4,
    0.060_518_341_312_441_32,
    0.002_335_204_976_268_691_8,
];

const CODY_SMALL: f64 = 0.468_75;

#[inline]
fn erf_small(z: f64) -> f64 {
    // erf(x)/x as a rational function of z = x²
    let a = &ERF_A;
    let b = &ERF_B;
    ((((a[4] * z + a[0]) * z + a[1]) * z + a[2]) * z + a[3])
        / ((((z + b[0]) * z + b[1]) * z + b[2]) * z + b[3])
}

/// erfcx(y) for y > 0.46875.
#[inline]
fn erfcx_positive(y: f64) -> f64 {
    if y <= 4.0 {
        let c = &ERFC_C;
        let d = &ERFC_D;
        let mut num = c[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + c[i]) * y;
            den = (den + d[i]) * y;
        }
        (num + c[7]) / (den + d[7])
    } else {
        let z = 1.0 / (y * y);
        let p = &ERFC_P;
        let q = &ERFC_Q;
        let pq = z * (((((p[5] * z + p[0]) * z + p[1]) * z + p[2]) * z + p[3]) * z + p[4])
            / (((((z + q[0]) * z + q[1]) * z + q[2]) * z + q[3]) * z + q[4]);
        (FRAC_1_SQRT_PI - pq) / y
    }
}

/// `exp(−v²/2)` with the square split so the exponent carries no rounding
/// error beyond a couple of ulps, even for |v| near 38.
#[inline]
fn exp_neg_half_sq(v: f64) -> f64 {
    let hi = (v * 16.0).trunc() / 16.0;
    let lo = v - hi;
    (-0.5 * hi * hi).exp() * (-0.5 * lo * (v + hi)).exp()
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Saturates at `f64::MAX` once the true value overflows (x < −26.63).
pub fn erfcx(x: f64) -> f64 {
    let y = x.abs();
    if y <= CODY_SMALL {
        return (y * y).exp() * (1.0 - x * erf_small(y * y));
    }
    if x < -26.628_735_713_751_4 {
        return f64::MAX;
    }
    let r = erfcx_positive(y);
    if x < 0.0 {
        let hi = (x * 16.0).trunc() / 16.0;
        let big = (hi * hi).exp() * ((x - hi) * (x + hi)).exp();
        2.0 * big - r
    } else {
        r
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= CODY_SMALL {
        return 1.0 - x * erf_small(y * y);
    }
    let hi = (y * 16.0).trunc() / 16.0;
    let tail = erfcx_positive(y) * (-hi * hi).exp() * (-(y - hi) * (y + hi)).exp();
    if x < 0.0 {
        2.0 - tail
    } else {
        tail
    }
}

/// `1 − Φ(v)` for finite v.
#[inline]
pub(crate) fn survival_unchecked(v: f64) -> f64 {
    let x = v * std::f64::consts::FRAC_1_SQRT_2;
    if x.abs() <= CODY_SMALL {
        0.5 * (1.0 - x * erf_small(x * x))
    } else if v > 0.0 {
        0.5 * erfcx_positive(x) * exp_neg_half_sq(v)
    } else {
        1.0 - 0.5 * erfcx_positive(-x) * exp_neg_half_sq(v)
    }
}

#[inline]
pub(crate) fn pdf_unchecked(v: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp_neg_half_sq(v)
}

#[inline]
pub(crate) fn log_survival_unchecked(v: f64) -> f64 {
    let x = v * std::f64::consts::FRAC_1_SQRT_2;
    if v < 0.0 {
        (-survival_unchecked(-v)).ln_1p()
    } else if x <= CODY_SMALL {
        survival_unchecked(v).ln()
    } else {
        (0.5 * erfcx_positive(x)).ln() - 0.5 * v * v
    }
}

/// `λ(v) − v` by the Laplace continued fraction, split as `r = 1/(v + s)`
/// with `s = 2/(v + 3/(v + 4/(v + …)))`. Returns `(r, s)`.
fn mills_excess_cf(v: f64) -> (f64, f64) {
    const TINY: f64 = 1e-300;
    // modified Lentz with a_j = j + 1, b_j = v
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..500 {
        let a = (j + 1) as f64;
        d = v + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = v + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (1.0 / (v + f), f)
}

#[inline]
pub(crate) fn mills_ratio_unchecked(v: f64) -> f64 {
    if v > MILLS_CF_THRESHOLD {
        v + mills_excess_cf(v).0
    } else {
        (pdf_unchecked(v) / survival_unchecked(v)).max(LAMBDA_FLOOR)
    }
}

#[inline]
pub(crate) fn mills_delta_unchecked(v: f64) -> f64 {
    if v > MILLS_CF_THRESHOLD {
        let (r, s) = mills_excess_cf(v);
        1.0 - r * (s - r)
    } else {
        let lambda = mills_ratio_unchecked(v);
        lambda * (lambda - v)
    }
}

/// `1 − λ(v)(λ(v) − v)`, the variance of a standard normal truncated below
/// at v, evaluated without cancellation in the upper tail.
#[inline]
pub(crate) fn mills_delta_complement_unchecked(v: f64) -> f64 {
    if v > MILLS_CF_THRESHOLD {
        let (r, s) = mills_excess_cf(v);
        r * (s - r)
    } else {
        1.0 - mills_delta_unchecked(v)
    }
}

#[inline]
fn check(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain { what, value: v })
    }
}

/// Standard normal density.
pub fn std_normal_pdf(v: f64) -> Result<f64> {
    check(v, "std_normal_pdf argument").map(pdf_unchecked)
}

/// Standard normal distribution function Φ(v).
pub fn std_normal_cdf(v: f64) -> Result<f64> {
    check(v, "std_normal_cdf argument").map(|v| survival_unchecked(-v))
}

/// Survival function `1 − Φ(v)`.
pub fn std_normal_sf(v: f64) -> Result<f64> {
    check(v, "std_normal_sf argument").map(survival_unchecked)
}

/// `log(1 − Φ(v))`, accurate deep into the upper tail.
pub fn log_survival(v: f64) -> Result<f64> {
    check(v, "log_survival argument").map(log_survival_unchecked)
}

/// `log Φ(v)`.
pub fn log_cdf(v: f64) -> Result<f64> {
    check(v, "log_cdf argument").map(|v| log_survival_unchecked(-v))
}

/// Inverse Mills ratio (normal hazard) `λ(v) = φ(v)/(1 − Φ(v))`.
pub fn mills_ratio(v: f64) -> Result<f64> {
    check(v, "mills_ratio argument").map(mills_ratio_unchecked)
}

/// `λ(v) − v`, computed directly so it stays positive for large v.
pub fn mills_excess(v: f64) -> Result<f64> {
    check(v, "mills_excess argument").map(|v| {
        if v > MILLS_CF_THRESHOLD {
            mills_excess_cf(v).0
        } else {
            mills_ratio_unchecked(v) - v
        }
    })
}

/// `λ(v)(λ(v) − v)`, the derivative of the hazard. Lies in (0, 1).
pub fn mills_delta(v: f64) -> Result<f64> {
    check(v, "mills_delta argument").map(mills_delta_unchecked)
}

/// The hazard and its derivative at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardValue {
    pub v: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl HazardValue {
    pub fn at(v: f64) -> Result<Self> {
        let v = check(v, "hazard argument")?;
        Ok(Self {
            v,
            lambda: mills_ratio_unchecked(v),
            delta: mills_delta_unchecked(v),
        })
    }
}

// Acklam's rational approximation, refined below by one Halley step.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

/// Lower-tail Acklam approximation from `q = √(−2 log p)`.
#[inline]
fn acklam_tail(q: f64) -> f64 {
    let c = &ACKLAM_C;
    let d = &ACKLAM_D;
    (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
        / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
}

/// Standard normal quantile Φ⁻¹(p) for p ∈ (0, 1).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "std_normal_quantile probability",
            value: p,
        });
    }
    Ok(quantile_unchecked(p))
}

pub(crate) fn quantile_unchecked(p: f64) -> f64 {
    const P_LOW: f64 = 0.024_25;
    let x = if p < P_LOW {
        acklam_tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        -acklam_tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    // Halley refinement against the accurate distribution function, working
    // from whichever tail keeps the residual relative.
    if p < 0.5 {
        let e = survival_unchecked(-x) - p;
        let u = e / pdf_unchecked(x);
        x - u / (1.0 + 0.5 * x * u)
    } else {
        let e = (1.0 - p) - survival_unchecked(x);
        let u = e / pdf_unchecked(x);
        x - u / (1.0 + 0.5 * x * u)
    }
}

/// The point z with `log(1 − Φ(z)) = ln_p`, for `ln_p < 0`.
///
/// Working in log space keeps the inversion exact for tail probabilities far
/// below the smallest positive double.
pub fn upper_tail_quantile_ln(ln_p: f64) -> Result<f64> {
    if !(ln_p < 0.0) || ln_p.is_infinite() {
        return Err(Error::Domain {
            what: "upper_tail_quantile_ln log-probability",
            value: ln_p,
        });
    }
    Ok(upper_tail_quantile_ln_unchecked(ln_p))
}

pub(crate) fn upper_tail_quantile_ln_unchecked(ln_p: f64) -> f64 {
    if ln_p > -std::f64::consts::LN_2 {
        // p > ½: the answer is negative and Φ(z) = 1 − p is the small side
        let lower = -ln_p.exp_m1();
        return quantile_unchecked(lower);
    }
    if ln_p > -700.0 {
        return -quantile_unchecked(ln_p.exp());
    }
    // Newton on log(1 − Φ(z)) − ln_p, whose derivative is −λ(z).
    let mut z = -acklam_tail((-2.0 * ln_p).sqrt());
    for _ in 0..8 {
        let g = log_survival_unchecked(z) - ln_p;
        let step = g / mills_ratio_unchecked(z);
        z += step;
        if step.abs() <= 4.0 * f64::EPSILON * z.abs() {
            break;
        }
    }
    z
}
