use limdep::data::{CensoredObservation, Observation};
use limdep::estimator::max_eigenvalue;
use limdep::model::{avg_loglik, tobit, truncated};
use limdep::validation::{gen_dataset, DgpConfig};
use limdep::{evaluate, Exec, ModelKind, Need, ReparamPoint};
use nalgebra::DVector;
use proptest::prelude::*;

fn point_strategy() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(-3.0..3.0f64, 3), 0.05..5.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn tobit_hessian_is_negative_semidefinite(
        (delta, gamma) in point_strategy(),
        z in prop::collection::vec(-4.0..4.0f64, 2),
        c in -5.0..5.0f64,
        excess in 1e-6..10.0f64,
        censored in any::<bool>(),
        a in prop::collection::vec(-10.0..10.0f64, 4),
    ) {
        let p = ReparamPoint::new(delta, gamma).unwrap();
        let x = [1.0, z[0], z[1]];
        let y = if censored { c } else { c + excess };
        let obs = CensoredObservation { y, x: &x, censored };
        let h = tobit::hessian_obs(obs, &p, c).unwrap();
        let scale = h.amax().max(1.0);
        prop_assert!(max_eigenvalue(&h) <= 1e-10 * scale);
        let a = DVector::from_vec(a);
        prop_assert!((a.transpose() * &h * &a)[0] <= 1e-10 * scale * a.norm_squared());
    }

    #[test]
    fn truncated_kernels_are_finite(
        (delta, gamma) in point_strategy(),
        z in prop::collection::vec(-4.0..4.0f64, 2),
        c in -50.0..50.0f64,
        excess in 1e-12..1e3f64,
    ) {
        let p = ReparamPoint::new(delta, gamma).unwrap();
        let x = [1.0, z[0], z[1]];
        let obs = Observation { y: c + excess, x: &x };
        if obs.y > c {
            let sh = truncated::score_hessian_obs(obs, &p, c).unwrap();
            prop_assert!(sh.loglik.is_finite());
            prop_assert!(sh.score.iter().all(|v| v.is_finite()));
            prop_assert!(sh.hessian.iter().all(|v| v.is_finite()));
            prop_assert!(sh.hessian == sh.hessian.transpose());
        }
    }

    #[test]
    fn reparametrization_round_trips(
        beta in prop::collection::vec(-100.0..100.0f64, 1..5),
        sigma in 1e-3..1e3f64,
    ) {
        let p = ReparamPoint::from_original(&beta, sigma).unwrap();
        for (b, back) in beta.iter().zip(p.beta()) {
            prop_assert!((b - back).abs() <= 1e-12 * b.abs().max(1.0));
        }
        prop_assert!((p.sigma() - sigma).abs() <= 1e-12 * sigma);
        let q = ReparamPoint::from_slice(p.to_vector().as_slice()).unwrap();
        prop_assert_eq!(p, q);
    }

    #[test]
    fn rejects_points_outside_the_domain(gamma in -5.0..=0.0f64) {
        prop_assert!(ReparamPoint::new(vec![1.0], gamma).is_err());
    }
}

#[test]
fn sequential_and_parallel_sums_agree_bitwise() {
    for kind in [ModelKind::Truncated, ModelKind::Tobit] {
        let dgp = DgpConfig::intercept_normal(vec![0.5, -1.0, 0.25], 1.5, -0.2, 5_123, 31);
        let data = gen_dataset(kind, &dgp).unwrap();
        let p = ReparamPoint::new(vec![0.3, -0.5, 0.1], 0.8).unwrap();
        let a = evaluate(&data, &p, Need::ALL, Exec::Sequential);
        let b = evaluate(&data, &p, Need::ALL, Exec::Parallel);
        assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
        assert_eq!(a.score, b.score);
        assert_eq!(a.hessian, b.hessian);
        assert_eq!(a.opg, b.opg);
        assert_eq!(
            avg_loglik(&data, &p, Exec::Sequential).to_bits(),
            avg_loglik(&data, &p, Exec::Parallel).to_bits()
        );
    }
}

#[test]
fn sample_sums_match_per_observation_kernels() {
    let dgp = DgpConfig::intercept_normal(vec![1.0, 0.5], 1.0, 0.0, 700, 2);
    let p = ReparamPoint::new(vec![0.9, 0.45], 1.1).unwrap();
    for kind in [ModelKind::Truncated, ModelKind::Tobit] {
        let data = gen_dataset(kind, &dgp).unwrap();
        let sums = evaluate(&data, &p, Need::ALL, Exec::Sequential);
        let (mut ll, mut s, mut h) = (0.0, DVector::zeros(3), nalgebra::DMatrix::zeros(3, 3));
        for t in 0..data.n() {
            let sh = match kind {
                ModelKind::Truncated => {
                    truncated::score_hessian_obs(data.observation(t), &p, 0.0).unwrap()
                }
                ModelKind::Tobit => {
                    tobit::score_hessian_obs(data.censored_observation(t), &p, 0.0).unwrap()
                }
            };
            ll += sh.loglik;
            s += sh.score;
            h += sh.hessian;
        }
        assert!((ll - sums.loglik).abs() <= 1e-10 * ll.abs());
        assert!((s - &sums.score).amax() <= 1e-9);
        assert!((h - &sums.hessian).amax() <= 1e-9);
    }
}
