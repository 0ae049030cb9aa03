//! Special functions against 50-digit reference values.

#![allow(clippy::excessive_precision, clippy::approx_constant)]

use limdep::special::{
    log_cdf, log_survival, mills_delta, mills_ratio, std_normal_cdf, std_normal_pdf, std_normal_sf,
};

/// (v, Φ(v), Q(v), log Q(v), λ(v), δ(v))
const TABLE: &[(f64, f64, f64, f64, f64, f64)] = &[
    (
        -40.0,
        3.6558935409150297e-350,
        1.0,
        -3.6558935409150297e-350,
        1.4632702508383032e-348,
        5.8530810033532127e-347,
    ),
    (
        -30.0,
        4.9067139271481871e-198,
        1.0,
        -4.9067139271481871e-198,
        1.4736461348785475e-196,
        4.4209384046356426e-195,
    ),
    (
        -20.0,
        2.7536241186062337e-89,
        1.0,
        -2.7536241186062337e-89,
        5.5209483621597632e-88,
        1.1041896724319526e-86,
    ),
    (
        -10.0,
        7.6198530241605261e-24,
        1.0,
        -7.6198530241605261e-24,
        7.6945986267064193e-23,
        7.6945986267064193e-22,
    ),
    (
        -5.0,
        2.8665157187919391e-7,
        9.9999971334842812e-1,
        -2.8665161296376359e-7,
        1.4867199409049057e-6,
        7.4336019148607112e-6,
    ),
    (
        -2.0,
        2.2750131948179207e-2,
        9.7724986805182079e-1,
        -2.3012909328963488e-2,
        5.5247862678989959e-2,
        1.1354805168857645e-1,
    ),
    (
        -1.0,
        1.5865525393145705e-1,
        8.4134474606854295e-1,
        -1.7275377902344989e-1,
        2.8759997093917836e-1,
        3.703137142233946e-1,
    ),
    (
        -0.5,
        3.085375387259869e-1,
        6.914624612740131e-1,
        -3.6894641528865639e-1,
        5.0916043383703349e-1,
        5.138245643036329e-1,
    ),
    (
        0.0,
        0.5,
        0.5,
        -6.9314718055994531e-1,
        7.9788456080286536e-1,
        6.3661977236758134e-1,
    ),
    (
        0.5,
        6.914624612740131e-1,
        3.085375387259869e-1,
        -1.1759117615936186,
        1.1410777703680645,
        7.3151959284412105e-1,
    ),
    (
        1.0,
        8.4134474606854295e-1,
        1.5865525393145705e-1,
        -1.8410216450092635,
        1.5251352761609812,
        8.0090233442965121e-1,
    ),
    (
        2.0,
        9.7724986805182079e-1,
        2.2750131948179207e-2,
        -3.7831843336820319,
        2.3732155328228409,
        8.8572089958591874e-1,
    ),
    (
        3.0,
        9.9865010196836991e-1,
        1.3498980316300945e-3,
        -6.6077262215103495,
        3.2830986549304365,
        9.2944081321473188e-1,
    ),
    (
        5.0,
        9.9999971334842812e-1,
        2.8665157187919391e-7,
        -1.5064998393988726e+1,
        5.1865039671258421,
        9.6730356538288777e-1,
    ),
    (
        5.5,
        9.9999998101043753e-1,
        1.8989562465887719e-8,
        -1.7779376352625261e+1,
        5.6714103138973056,
        9.7213822214555377e-1,
    ),
    (
        6.0,
        9.9999999901341235e-1,
        9.8658764503769814e-10,
        -2.0736768949974706e+1,
        6.1584826045445989,
        9.7601236321083323e-1,
    ),
    (
        10.0,
        1.0,
        7.6198530241605261e-24,
        -5.3231285150512471e+1,
        1.0098093233962512e+1,
        9.9055462217434374e-1,
    ),
    (
        20.0,
        1.0,
        2.7536241186062337e-89,
        -2.0391715537109726e+2,
        2.0049753068527851e+1,
        9.9753673838494784e-1,
    ),
    (
        30.0,
        1.0,
        4.9067139271481871e-198,
        -4.543212439563432e+2,
        3.0033259667433677e+1,
        9.9889622848810991e-1,
    ),
    (
        37.0,
        1.0,
        5.7255712225245768e-300,
        -6.8903058557689059e+2,
        3.702698768612699e+1,
        9.9927272190112249e-1,
    ),
    (
        40.0,
        1.0,
        3.6558935409150297e-350,
        -8.0460844201375379e+2,
        4.0024968847207264e+1,
        9.9937733162140861e-1,
    ),
    (
        1000.0,
        1.0,
        0.0,
        -5.0000782669481218e+5,
        1.000000999998e+3,
        9.9999900000599995e-1,
    ),
];

/// Below this the reference value is not a normal double.
const TINY: f64 = 1e-300;

fn close(got: f64, want: f64, rtol: f64) -> bool {
    if want.abs() < TINY {
        return got.abs() < TINY;
    }
    ((got - want) / want).abs() <= rtol
}

#[test]
fn cdf_and_survival() {
    for &(v, cdf, sf, ..) in TABLE {
        assert!(close(std_normal_cdf(v).unwrap(), cdf, 1e-14), "Phi({v})");
        assert!(close(std_normal_sf(v).unwrap(), sf, 1e-14), "Q({v})");
    }
}

#[test]
fn log_survival_and_log_cdf() {
    for &(v, _, _, ln_sf, ..) in TABLE {
        let got = log_survival(v).unwrap();
        assert!(close(got, ln_sf, 1e-13), "log Q({v}) = {got}");
        // log Φ(−v) = log Q(v)
        let mirrored = log_cdf(-v).unwrap();
        assert!(
            close(mirrored, ln_sf, 1e-13),
            "log Phi({}) = {mirrored}",
            -v
        );
    }
}

#[test]
fn hazard_and_its_derivative() {
    for &(v, .., lam, delta) in TABLE {
        let l = mills_ratio(v).unwrap();
        let d = mills_delta(v).unwrap();
        assert!(close(l, lam, 1e-13), "lambda({v}) = {l}, want {lam}");
        assert!(close(d, delta, 1e-12), "delta({v}) = {d}, want {delta}");
        assert!(l > 0.0 && d > 0.0 && d < 1.0);
    }
}

#[test]
fn density_reference_points() {
    assert_eq!(std_normal_pdf(0.0).unwrap(), 0.398_942_280_401_432_7);
    assert!(close(
        std_normal_pdf(1.0).unwrap(),
        0.241_970_724_519_143_35,
        1e-15
    ));
    assert!(close(
        std_normal_pdf(-37.0).unwrap(),
        2.120_006_551_524_605_6e-298,
        1e-13
    ));
}
