use idpath::diagnostics::stats::{ks_one_sample, mean_se};
use idpath::levy_rep::residual_covariance_numeric;
use idpath::quad::{integrate_finite, Tolerance};
use idpath::{Atom, LevyRepresentation, Mark};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

fn atom(xi: Vec<f64>, weight: f64) -> Atom {
    Atom { xi, weight, theta: 0.0 }
}

fn tempered_atom(xi: Vec<f64>, weight: f64, theta: f64) -> Atom {
    Atom { xi, weight, theta }
}

fn planar_stable() -> LevyRepresentation {
    LevyRepresentation::stable(
        1.3,
        vec![
            atom(vec![1.0, 0.0], 1.0),
            atom(vec![0.0, 1.0], 0.5),
            atom(vec![-0.6, -0.8], 2.0),
        ],
    )
    .unwrap()
}

fn planar_tempered() -> LevyRepresentation {
    LevyRepresentation::tempered_stable(
        0.8,
        vec![
            tempered_atom(vec![1.0, 0.0], 1.0, 1.0),
            tempered_atom(vec![0.0, -1.0], 0.7, 2.5),
        ],
    )
    .unwrap()
}

#[test]
fn gamma_marks_are_standard_exponential() {
    let rep = LevyRepresentation::gamma(1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let us: Vec<f64> = (0..100_000)
        .map(|_| match rep.sample_mark(&mut rng) {
            Mark::Exponential(u) => u,
            other => panic!("unexpected mark {other:?}"),
        })
        .collect();
    let res = ks_one_sample(&us, |x| if x > 0.0 { 1.0 - (-x).exp() } else { 0.0 });
    assert!(res.p_value > 0.01, "{res:?}");
}

#[test]
fn symmetric_stable_directions_are_balanced() {
    let rep = LevyRepresentation::symmetric_stable_1d(1.1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 100_000;
    let plus = (0..n)
        .filter(|_| {
            let mark = rep.sample_mark(&mut rng);
            rep.direction(mark.direction_index())[0] > 0.0
        })
        .count();
    let freq = plus as f64 / n as f64;
    assert!((freq - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{freq}");
}

#[test]
fn tempered_uniform_mark_component() {
    let rep = planar_tempered();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vs: Vec<f64> = (0..100_000)
        .map(|_| match rep.sample_mark(&mut rng) {
            Mark::Tempered { v, .. } => v,
            other => panic!("unexpected mark {other:?}"),
        })
        .collect();
    assert!(ks_one_sample(&vs, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
}

#[test]
fn one_sided_stable_centers_by_quadrature() {
    let rep = LevyRepresentation::stable(0.5, vec![atom(vec![1.0], 1.0)]).unwrap();
    assert_eq!(rep.center(1), vec![0.0]);
    // H(s) = s^{-2}, ‖H‖ ≤ 1 iff s ≥ 1
    let oracle = integrate_finite(|s: f64| s.powi(-2), 1.0, 2.0, Tolerance::new(1e-15, 1e-13)).value;
    assert!((rep.center(2)[0] - oracle).abs() < 1e-12);
    assert!((oracle - 0.5).abs() < 1e-12);
}

#[test]
fn gamma_first_center_matches_monte_carlo() {
    let rep = LevyRepresentation::gamma(1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draws: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let s: f64 = rng.random();
            let u: f64 = Exp1.sample(&mut rng);
            if u <= s.exp() {
                (-s).exp() * u
            } else {
                0.0
            }
        })
        .collect();
    let (mean, se) = mean_se(&draws);
    let c1 = rep.center(1)[0];
    assert!((c1 - mean).abs() < 3.0 * se, "c1={c1} mc={mean}±{se}");
}

#[test]
fn numeric_covariance_matches_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gamma = LevyRepresentation::gamma(2.0, 1.0).unwrap();
    let closed = gamma.residual_covariance(2.0).unwrap()[(0, 0)];
    assert!((closed - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
    let est = residual_covariance_numeric(&gamma, 2.0, 100_000, 80.0, &mut rng).unwrap();
    assert!((est.mean[(0, 0)] - closed).abs() < 3.0 * est.std_error[(0, 0)]);

    let stable = LevyRepresentation::symmetric_stable_1d(1.0, 1.0).unwrap();
    let closed = stable.residual_covariance(10.0).unwrap()[(0, 0)];
    assert!((closed - 0.4).abs() < 1e-14);
    let est = residual_covariance_numeric(&stable, 10.0, 100_000, 1e10, &mut rng).unwrap();
    assert!((est.mean[(0, 0)] - closed).abs() < 3.0 * est.std_error[(0, 0)] + 1e-9);
}

#[test]
fn stable_decomposition_reproduces_truncated_tail_mass() {
    // ∫₀^m P(‖H(r,U)‖ > ε) dr = min(m, ‖λ‖ε^{-α}), midpoint rule in r.
    let rep = planar_stable();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for &(m, eps) in &[(10.0, 0.5), (2.0, 0.5), (50.0, 1.0), (1.0, 3.0)] {
        let n = 200_000;
        let h = m / n as f64;
        let mut hits = 0usize;
        for i in 0..n {
            let mark = rep.sample_mark(&mut rng);
            let r = (i as f64 + 0.5) * h;
            let z = rep.jump_magnitude(r, &mark).unwrap();
            if z.iter().map(|x| x * x).sum::<f64>().sqrt() > eps {
                hits += 1;
            }
        }
        let measured = hits as f64 * h;
        let exact = f64::min(m, rep.total_weight() * eps.powf(-1.3));
        assert!(
            (measured / exact - 1.0).abs() < 1e-3,
            "m={m} eps={eps}: {measured} vs {exact}"
        );
    }
}

#[test]
fn magnitude_vanishes_at_infinity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for rep in [
        LevyRepresentation::gamma(1.5, 0.5).unwrap(),
        planar_stable(),
        planar_tempered(),
    ] {
        for _ in 0..100 {
            let mark = rep.sample_mark(&mut rng);
            let z = rep.jump_magnitude(1e12, &mark).unwrap();
            assert!(z.iter().all(|x| x.abs() < 1e-5), "{}: {z:?}", rep.id());
        }
    }
}

fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

fn reps() -> Vec<LevyRepresentation> {
    vec![
        LevyRepresentation::gamma(2.0, 1.5).unwrap(),
        planar_stable(),
        planar_tempered(),
        LevyRepresentation::exponential_cp(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn residual_covariance_is_monotone(m in 0.01f64..50.0, gap in 0.0f64..50.0) {
        for rep in reps() {
            let lo = rep.residual_covariance(m).unwrap();
            let hi = rep.residual_covariance(m + gap).unwrap();
            let scale = lo.norm().max(1e-300);
            prop_assert!(min_eigenvalue(&hi) >= -1e-12 * scale);
            prop_assert!(min_eigenvalue(&(&lo - &hi)) >= -1e-10 * scale, "{}", rep.id());
            prop_assert!((&lo - lo.transpose()).norm() <= 1e-14 * scale);
        }
    }

    #[test]
    fn magnitude_is_nonincreasing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for rep in reps() {
            let mark = rep.sample_mark(&mut rng);
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let r = 1e-3 * 1.1f64.powi(i);
                let z = rep.jump_magnitude(r, &mark).unwrap();
                let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(norm <= prev, "{} at r={r}", rep.id());
                prev = norm;
            }
        }
    }
}
