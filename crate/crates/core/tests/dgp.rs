//! Sampler moments, censoring calibration and determinism of the generators.

use limdep::model::truncated::{truncated_mean, truncated_var};
use limdep::special::std_normal_cdf;
use limdep::validation::{
    gen_dataset, gen_tobit, gen_truncated, sample_truncated_normal, stream_rng, DgpConfig,
    RegressorSpec,
};
use limdep::{fit, Error, FitOptions, ModelKind};

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

/// Fourth central moment, for the standard error of the sample variance.
fn m4(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / v.len() as f64
}

#[test]
fn truncated_sampler_matches_closed_form_moments() {
    let combos = [
        (0.0, 1.0, 0.0),
        (1.0, 1.0, 0.0),
        (-1.0, 1.0, 0.0),
        (0.0, 2.0, 1.0),
        (3.0, 0.5, 0.0),
        (-3.0, 1.0, 0.0),
        (-5.0, 1.0, 0.0),
        (0.0, 1.0, 4.0),
        (0.0, 1.0, 8.0),
        (2.0, 3.0, -1.0),
        (-2.0, 0.3, -2.5),
        (10.0, 1.0, 0.0),
        (0.0, 1.0, -10.0),
        (1.5, 2.0, 6.0),
        (0.0, 0.1, 0.05),
        (-0.5, 1.0, 2.0),
        (4.0, 4.0, 1.0),
        (0.0, 1.0, 12.0),
        (-1.0, 5.0, 20.0),
        (0.7, 1.3, 0.7),
    ];
    let n = 40_000;
    for (i, &(mu, sigma, c)) in combos.iter().enumerate() {
        let mut rng = stream_rng(42, i as u64);
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_truncated_normal(&mut rng, mu, sigma, c).unwrap())
            .collect();
        assert!(draws.iter().all(|&y| y > c));
        let (m, v) = mean_var(&draws);
        let want_m = truncated_mean(mu, sigma, c).unwrap();
        let want_v = truncated_var(mu, sigma, c).unwrap();
        let se_m = (want_v / n as f64).sqrt();
        let se_v = ((m4(&draws, m) - v * v) / n as f64).sqrt();
        assert!(
            (m - want_m).abs() <= 4.0 * se_m,
            "{mu} {sigma} {c}: mean {m} vs {want_m}"
        );
        assert!(
            (v - want_v).abs() <= 4.0 * se_v,
            "{mu} {sigma} {c}: var {v} vs {want_v}"
        );
    }
}

#[test]
fn negligible_truncation_leaves_the_mean_at_zero() {
    let n = 20_000;
    let dgp = DgpConfig::intercept_normal(vec![0.0], 1.0, -1e6, n, 5);
    let d = gen_truncated(&dgp).unwrap();
    let (m, _) = mean_var(d.y());
    assert!(m.abs() <= 4.0 / (n as f64).sqrt());
}

#[test]
fn symmetric_truncation_at_zero() {
    let n = 20_000;
    let dgp = DgpConfig::intercept_normal(vec![0.0], 1.0, 0.0, n, 6);
    let d = gen_truncated(&dgp).unwrap();
    let (m, v) = mean_var(d.y());
    let var0 = truncated_var(0.0, 1.0, 0.0).unwrap();
    assert!((var0 - 0.363_380_227_632_418_7).abs() < 1e-15);
    assert!((m - 0.797_884_560_802_865_4).abs() <= 4.0 * (var0 / n as f64).sqrt());
    let se_v = ((m4(d.y(), m) - v * v) / n as f64).sqrt();
    assert!((v - var0).abs() <= 4.0 * se_v);
}

#[test]
fn censoring_share_matches_each_cell() {
    let cells = [-1.5, -0.5, 0.0, 0.4, 1.2];
    let per_cell = 8_000;
    let n = cells.len() * per_cell;
    let rows: Vec<f64> = (0..n).flat_map(|t| [1.0, cells[t % cells.len()]]).collect();
    let dgp = DgpConfig {
        beta0: vec![0.2, 0.9],
        sigma0: 1.4,
        c: 0.3,
        regressors: RegressorSpec::Matrix { k: 2, rows },
        n,
        seed: 17,
    };
    let d = gen_tobit(&dgp).unwrap();
    for (j, &z) in cells.iter().enumerate() {
        let p = std_normal_cdf((dgp.c - 0.2 - 0.9 * z) / dgp.sigma0).unwrap();
        let share = (j..n)
            .step_by(cells.len())
            .filter(|&t| d.is_censored(t))
            .count() as f64
            / per_cell as f64;
        let se = (p * (1.0 - p) / per_cell as f64).sqrt();
        assert!((share - p).abs() <= 4.0 * se, "cell {z}: {share} vs {p}");
    }
    for t in 0..n {
        assert_eq!(d.is_censored(t), d.y()[t] == dgp.c);
    }
}

#[test]
fn intercept_only_tobit_censors_half() {
    let n = 10_000;
    let d = gen_tobit(&DgpConfig::intercept_normal(vec![0.0], 1.0, 0.0, n, 8)).unwrap();
    let share = d.n_censored() as f64 / n as f64;
    assert!((share - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt());
}

#[test]
fn censoring_extremes() {
    let low = gen_tobit(&DgpConfig::intercept_normal(vec![0.0], 1.0, -1e6, 500, 9)).unwrap();
    assert_eq!(low.n_censored(), 0);
    let high = gen_tobit(&DgpConfig::intercept_normal(vec![0.0], 1.0, 1e6, 500, 9)).unwrap();
    assert_eq!(high.n_censored(), 500);
    assert!(matches!(
        fit(&high, &FitOptions::default()),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn identical_configs_give_identical_samples() {
    for kind in [ModelKind::Truncated, ModelKind::Tobit] {
        let dgp = DgpConfig::intercept_normal(vec![1.0, 0.5], 1.0, 0.0, 3_000, 123);
        let a = gen_dataset(kind, &dgp).unwrap();
        let b = gen_dataset(kind, &dgp).unwrap();
        assert_eq!(a, b);
        let c = gen_dataset(kind, &dgp.with_seed(124)).unwrap();
        assert_ne!(a.y(), c.y());
    }
}

#[test]
fn deep_truncation_stays_exact() {
    // P(y > c) ≈ 1e-200 for every row: the tail draw alone handles it.
    let rows: Vec<f64> = vec![1.0; 50];
    let dgp = DgpConfig {
        beta0: vec![0.0],
        sigma0: 1.0,
        c: 30.0,
        regressors: RegressorSpec::Matrix { k: 1, rows },
        n: 50,
        seed: 3,
    };
    assert!(matches!(
        gen_truncated(&dgp),
        Err(Error::PathologicalDgp(_))
    ));
    let mut rng = stream_rng(1, 0);
    for _ in 0..1000 {
        let y = sample_truncated_normal(&mut rng, 0.0, 1.0, 30.0).unwrap();
        assert!(y > 30.0 && y < 31.0);
    }
}
