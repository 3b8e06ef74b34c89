use idpath::diagnostics::stats::{
    correlation, ks_two_sample, mann_whitney_greater, mean_se, poisson_chi_square, variance_se,
};
use idpath::simulator::{
    component_seed, generate_batch, path_rng, sample_q_band, Component, PathGenerator, RefinementField,
};
use idpath::{GridSpec, Interval, Kernel, LevyRepresentation, TruncationParams};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

fn unit() -> Interval {
    Interval::new(0.0, 1.0)
}

fn at(paths: &[idpath::SamplePath], t: f64) -> Vec<f64> {
    paths.iter().map(|p| p.values[p.index_of(t).unwrap()][0]).collect()
}

#[test]
fn exp_cp_matches_direct_compound_poisson() {
    let rep = LevyRepresentation::exponential_cp();
    let k = Kernel::indicator(1.0).unwrap();
    let trunc = TruncationParams::new(1.0, unit()).unwrap();
    let paths = generate_batch(&rep, &k, &trunc, &GridSpec::uniform(4, 1.0), 20, 10_000).unwrap();
    let simulated = at(&paths, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let poisson = Poisson::new(1.0).unwrap();
    let oracle: Vec<f64> = (0..10_000)
        .map(|_| {
            let n = poisson.sample(&mut rng) as usize;
            (0..n).map(|_| -> f64 { Exp1.sample(&mut rng) }).sum::<f64>()
        })
        .collect();
    let res = ks_two_sample(&simulated, &oracle);
    assert!(res.p_value > 0.01, "{res:?}");
}

#[test]
fn gamma_marginal_moments() {
    let rep = LevyRepresentation::gamma(1.0, 1.0).unwrap();
    let k = Kernel::indicator(1.0).unwrap();
    let trunc = TruncationParams::new(50.0, unit()).unwrap();
    let paths = generate_batch(&rep, &k, &trunc, &GridSpec::uniform(2, 1.0), 21, 10_000).unwrap();
    let x = at(&paths, 1.0);
    let (mean, se) = mean_se(&x);
    assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
    let (var, vse) = variance_se(&x);
    assert!((var - 1.0).abs() < 3.0 * vse, "{var} ± {vse}");
    // Half time: Gamma(1/2, 1).
    let (mean, se) = mean_se(&at(&paths, 0.5));
    assert!((mean - 0.5).abs() < 3.0 * se);
}

#[test]
fn jump_count_is_poisson() {
    let rep = LevyRepresentation::symmetric_stable_1d(1.2, 1.0).unwrap();
    let k = Kernel::indicator(2.0).unwrap();
    let trunc = TruncationParams::new(1.85, Interval::new(0.0, 2.0)).unwrap();
    let paths = generate_batch(&rep, &k, &trunc, &GridSpec::uniform(1, 2.0), 22, 10_000).unwrap();
    let counts: Vec<usize> = paths.iter().map(|p| p.meta.jump_count).collect();
    let res = poisson_chi_square(&counts, 3.7);
    assert!(res.p_value > 0.01, "{res:?}");
}

#[test]
fn q_band_mean_and_isometry() {
    let alpha = 1.5;
    let rep = LevyRepresentation::symmetric_stable_1d(alpha, 1.0).unwrap();
    let k = Kernel::ou(1.0, 0.0, 0.0, 1.0).unwrap();
    let (m, big_m) = (10.0, 100.0);
    let grid = GridSpec::Times { times: vec![0.5, 1.0] };
    let gen = PathGenerator::q_band(&rep, &k, m, big_m, unit(), &grid).unwrap();
    let paths = gen.sample_batch(23, Component::QBand, 100_000);
    let band = rep.residual_covariance(m).unwrap()[(0, 0)] - rep.residual_covariance(big_m).unwrap()[(0, 0)];
    for &t in &[0.5, 1.0] {
        let x = at(&paths, t);
        let (mean, se) = mean_se(&x);
        assert!(mean.abs() < 3.0 * se, "t={t}: {mean} ± {se}");
        let expected = band * k.square_integral(t, &unit()).unwrap();
        let (var, _) = variance_se(&x);
        assert!((var / expected - 1.0).abs() < 0.05, "t={t}: {var} vs {expected}");
    }
}

#[test]
fn refinement_brownian_variance() {
    let k = Kernel::indicator(1.0).unwrap();
    let field = RefinementField::new(
        &k,
        &DMatrix::from_element(1, 1, 1.0),
        unit(),
        &GridSpec::uniform(4, 1.0),
        1 << 14,
    )
    .unwrap();
    let cs = component_seed(24, Component::Refinement);
    let paths: Vec<_> = (0..10_000u64)
        .into_par_iter()
        .map(|i| field.sample(&mut path_rng(cs, i)))
        .collect();
    for &t in &[0.25, 0.5, 1.0] {
        let (var, _) = variance_se(&at(&paths, t));
        assert!((var / t - 1.0).abs() < 0.05, "t={t}: {var}");
    }
}

#[test]
fn refinement_ou_covariance() {
    let k = Kernel::ou(2.0, 0.0, 0.0, 1.0).unwrap();
    let grid = GridSpec::Times { times: vec![0.4, 1.0] };
    let field = RefinementField::new(&k, &DMatrix::from_element(1, 1, 1.0), unit(), &grid, 512).unwrap();
    let cs = component_seed(25, Component::Refinement);
    let paths: Vec<_> = (0..100_000u64)
        .into_par_iter()
        .map(|i| field.sample(&mut path_rng(cs, i)))
        .collect();
    let a = at(&paths, 0.4);
    let b = at(&paths, 1.0);
    let n = a.len() as f64;
    let cov = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n;
    let expected = k.cross_integral(0.4, 1.0, &unit()).unwrap();
    assert!((cov / expected - 1.0).abs() < 0.05, "{cov} vs {expected}");
}

#[test]
fn independent_components_are_uncorrelated() {
    let rep = LevyRepresentation::symmetric_stable_1d(1.7, 1.0).unwrap();
    let k = Kernel::ou(1.0, 0.0, 0.0, 1.0).unwrap();
    let grid = GridSpec::uniform(2, 1.0);
    let n = 5000;
    let x = PathGenerator::principal(&rep, &k, &TruncationParams::new(5.0, unit()).unwrap(), &grid)
        .unwrap()
        .sample_batch(26, Component::Principal, n);
    let q = PathGenerator::q_band(&rep, &k, 5.0, 50.0, unit(), &grid)
        .unwrap()
        .sample_batch(26, Component::QBand, n);
    let field = RefinementField::new(&k, &DMatrix::from_element(1, 1, 0.3), unit(), &grid, 256).unwrap();
    let cs = component_seed(26, Component::Refinement);
    let g: Vec<_> = (0..n as u64).map(|i| field.sample(&mut path_rng(cs, i))).collect();
    for &t in &[0.5, 1.0] {
        let (xs, qs, gs) = (at(&x, t), at(&q, t), at(&g, t));
        let (r, se) = correlation(&xs, &qs);
        assert!(r.abs() < 3.0 * se, "X,Q at {t}: {r}");
        let (r, se) = correlation(&qs, &gs);
        assert!(r.abs() < 3.0 * se, "Q,G at {t}: {r}");
        // Refinement additivity.
        let sum: Vec<f64> = qs.iter().zip(&gs).map(|(a, b)| a + b).collect();
        let (v_sum, se_sum) = variance_se(&sum);
        let expected = variance_se(&qs).0 + variance_se(&gs).0;
        assert!((v_sum - expected).abs() < 3.0 * se_sum, "{v_sum} vs {expected}");
    }
}

#[test]
fn reverse_ou_out_of_window_band_degenerates() {
    let rep = LevyRepresentation::symmetric_stable_1d(1.5, 1.0).unwrap();
    let k = Kernel::reverse_ou(1.0, 1.0).unwrap();
    let grid = GridSpec::uniform(10, 1.0);
    let far = 40.0;
    let sups = |n: f64| -> Vec<f64> {
        let inner = Interval::new(-far, 1.0 + n);
        let outer = Interval::new(-far, 1.0 + far);
        PathGenerator::r_band(&rep, &k, 5.0, inner, outer, &grid)
            .unwrap()
            .sample_batch(27, Component::RBand, 2000)
            .iter()
            .map(|p| p.sup_norm())
            .collect()
    };
    let near = sups(0.5);
    let mid = sups(2.0);
    let distant = sups(5.0);
    assert!(mann_whitney_greater(&near, &mid).p_value < 0.01);
    assert!(mann_whitney_greater(&mid, &distant).p_value < 0.01);
}

#[test]
fn single_path_helpers_agree_with_generator() {
    let rep = LevyRepresentation::gamma(2.0, 1.0).unwrap();
    let k = Kernel::indicator(1.0).unwrap();
    let grid = GridSpec::uniform(4, 1.0);
    let mut a = ChaCha8Rng::seed_from_u64(1);
    let mut b = ChaCha8Rng::seed_from_u64(1);
    let p = sample_q_band(&rep, &k, 1.0, 3.0, unit(), &grid, &mut a).unwrap();
    let q = PathGenerator::q_band(&rep, &k, 1.0, 3.0, unit(), &grid)
        .unwrap()
        .sample(&mut b);
    assert_eq!(p, q);
    assert_eq!(p.meta.m, 1.0);
    assert_eq!(p.meta.m_upper, Some(3.0));
}
