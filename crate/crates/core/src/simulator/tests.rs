use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

fn indicator() -> Kernel {
    Kernel::indicator(1.0).unwrap()
}

#[test]
fn no_jumps_gives_zero_path_without_drift() {
    // Stable, asymmetric, so the drift term is nonzero; with ℓm tiny the
    // series is almost surely empty.
    let rep = LevyRepresentation::stable(
        1.5,
        vec![crate::Atom {
            xi: vec![1.0],
            weight: 1.0,
            theta: 0.0,
        }],
    )
    .unwrap();
    let k = indicator();
    let trunc = TruncationParams::new(1e-9, Interval::new(0.0, 1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = generate_path(&rep, &k, &trunc, &GridSpec::uniform(4, 1.0), &mut rng).unwrap();
    assert_eq!(p.meta.jump_count, 0);
    assert!(p.values.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn batch_is_deterministic_and_ordered() {
    let rep = LevyRepresentation::gamma(1.0, 1.0).unwrap();
    let k = indicator();
    let trunc = TruncationParams::new(5.0, Interval::new(0.0, 1.0)).unwrap();
    let grid = GridSpec::uniform(8, 1.0);
    let a = generate_batch(&rep, &k, &trunc, &grid, 11, 20).unwrap();
    let b = generate_batch(&rep, &k, &trunc, &grid, 11, 20).unwrap();
    assert_eq!(a, b);
    for (i, p) in a.iter().enumerate() {
        assert_eq!(p.meta.stream, Some(i as u64));
    }
    let c = generate_batch(&rep, &k, &trunc, &grid, 12, 20).unwrap();
    assert_ne!(a, c);
}

#[test]
fn empty_bands_are_zero() {
    let rep = LevyRepresentation::symmetric_stable_1d(1.2, 1.0).unwrap();
    let k = indicator();
    let grid = GridSpec::uniform(4, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let q = sample_q_band(&rep, &k, 10.0, 10.0, Interval::new(0.0, 1.0), &grid, &mut rng).unwrap();
    assert!(q.values.iter().flatten().all(|&v| v == 0.0));
    // R band outside the support of the indicator kernel.
    let r = sample_r_band(
        &rep,
        &k,
        5.0,
        Interval::new(0.0, 1.0),
        Interval::new(0.0, 1.0),
        &grid,
        &mut rng,
    )
    .unwrap();
    assert!(r.values.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn zero_covariance_refinement_is_zero() {
    let k = indicator();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = gaussian_refinement(
        &k,
        &DMatrix::zeros(1, 1),
        Interval::new(0.0, 1.0),
        &GridSpec::uniform(4, 1.0),
        256,
        &mut rng,
    )
    .unwrap();
    assert!(p.values.iter().flatten().all(|&v| v == 0.0));
    assert!(p.meta.refined);
}

#[test]
fn singular_covariance_is_assumption_error() {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let err = covariance_factor(&cov).unwrap_err();
    assert_eq!(err.code(), "ASSUMPTION_3A");
}

#[test]
fn unbounded_kernel_is_refused() {
    let rep = LevyRepresentation::gamma(1.0, 1.0).unwrap();
    let k = Kernel::log_frac(1.0).unwrap();
    let trunc = TruncationParams::new(5.0, Interval::new(0.0, 1.0)).unwrap();
    let err = generate_batch(&rep, &k, &trunc, &GridSpec::uniform(4, 1.0), 0, 1).unwrap_err();
    assert_eq!(err.code(), "KERNEL_UNBOUNDED");
}

#[test]
fn window_outside_domain_is_rejected() {
    let rep = LevyRepresentation::gamma(1.0, 1.0).unwrap();
    let k = indicator();
    let trunc = TruncationParams::new(5.0, Interval::new(-1.0, 1.0)).unwrap();
    let err = generate_batch(&rep, &k, &trunc, &GridSpec::uniform(4, 1.0), 0, 1).unwrap_err();
    assert_eq!(err.code(), "TRUNCATION_INVALID");
}
