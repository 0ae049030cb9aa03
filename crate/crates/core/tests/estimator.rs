use limdep::estimator::Init;
use limdep::validation::{gen_dataset, DgpConfig};
use limdep::{fit, Exec, FitOptions, ModelKind, ReparamPoint};

fn dgp(n: usize, seed: u64) -> DgpConfig {
    DgpConfig::intercept_normal(vec![1.0, 0.5, -0.75], 1.5, 0.25, n, seed)
}

#[test]
fn large_samples_recover_the_truth() {
    for kind in [ModelKind::Truncated, ModelKind::Tobit] {
        let cfg = dgp(20_000, 1);
        let data = gen_dataset(kind, &cfg).unwrap();
        let f = fit(&data, &FitOptions::default()).unwrap();
        assert!(f.converged, "{kind}");
        assert!(f.avg_score_norm <= 1e-8);
        let truth = cfg.truth().to_vector();
        let se = f.std_errors_theta().unwrap();
        for j in 0..truth.len() {
            let z = (f.theta_hat.to_vector()[j] - truth[j]) / se[j];
            assert!(z.abs() < 4.0, "{kind} coordinate {j}: z = {z}");
        }
        let orig = f.orig.as_ref().unwrap();
        assert_eq!(orig.beta, f.theta_hat.beta());
        assert_eq!(orig.sigma2, f.theta_hat.sigma2());
        assert!(f
            .trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
    }
}

#[test]
fn execution_mode_does_not_change_the_fit() {
    for kind in [ModelKind::Truncated, ModelKind::Tobit] {
        let data = gen_dataset(kind, &dgp(3_000, 2)).unwrap();
        let run = |exec| {
            fit(
                &data,
                &FitOptions {
                    exec,
                    ..FitOptions::default()
                },
            )
            .unwrap()
        };
        let a = run(Exec::Sequential);
        let b = run(Exec::Parallel);
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
    }
}

#[test]
fn tobit_optimum_does_not_depend_on_the_start() {
    let data = gen_dataset(ModelKind::Tobit, &dgp(2_000, 3)).unwrap();
    let starts = [
        ReparamPoint::new(vec![0.0, 0.0, 0.0], 1.0).unwrap(),
        ReparamPoint::new(vec![-3.0, 2.0, 2.0], 0.1).unwrap(),
        ReparamPoint::new(vec![4.0, -1.0, 0.5], 6.0).unwrap(),
    ];
    let fits: Vec<_> = starts
        .into_iter()
        .map(|s| {
            let f = fit(
                &data,
                &FitOptions {
                    init: Init::Point(s),
                    ..FitOptions::default()
                },
            )
            .unwrap();
            assert!(f.converged);
            f.theta_hat.to_vector()
        })
        .collect();
    for f in &fits[1..] {
        assert!((f - &fits[0]).amax() < 1e-6);
    }
}

#[test]
fn multistart_never_loses_to_a_single_start() {
    let data = gen_dataset(ModelKind::Truncated, &dgp(1_000, 4)).unwrap();
    let one = fit(
        &data,
        &FitOptions {
            n_starts: 1,
            ..FitOptions::default()
        },
    )
    .unwrap();
    let many = fit(&data, &FitOptions::default()).unwrap();
    assert!(many.loglik >= one.loglik - 1e-9 * one.loglik.abs());
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let data = gen_dataset(ModelKind::Tobit, &dgp(2_000, 5)).unwrap();
    let f = fit(
        &data,
        &FitOptions {
            max_iter: 1,
            init: Init::Point(ReparamPoint::new(vec![0.0, 0.0, 0.0], 3.0).unwrap()),
            ..FitOptions::default()
        },
    )
    .unwrap();
    assert!(!f.converged);
    assert_eq!(f.n_iter, 1);
}

#[test]
fn avar_forms_agree_at_the_truth_scale() {
    let data = gen_dataset(ModelKind::Tobit, &dgp(50_000, 6)).unwrap();
    let f = fit(&data, &FitOptions::default()).unwrap();
    let h = f.avar_hessian().unwrap();
    let o = f.avar_opg().unwrap();
    assert!((&h - &o).norm() / h.norm() < 0.1);
    assert!(f.min_eig_neg_avg_hessian > 0.0);
}
