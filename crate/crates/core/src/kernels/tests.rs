use super::*;

const E: f64 = std::f64::consts::E;

#[test]
fn evaluate_examples() {
    let ind = Kernel::indicator(2.0).unwrap();
    assert_eq!(ind.evaluate(1.0, 0.5), 1.0);
    assert_eq!(ind.evaluate(1.0, 1.5), 0.0);
    let ou = Kernel::ou(1.0, 0.0, 0.0, 1.0).unwrap();
    assert!((ou.evaluate(1.0, 0.0) - 1.0 / E).abs() < 1e-15);
    let rou = Kernel::reverse_ou(2.0, 1.0).unwrap();
    assert_eq!(rou.evaluate(1.0, 1.0), 1.0);
    assert_eq!(rou.evaluate(1.0, 0.5), 0.0);
}

#[test]
fn time_integral_examples() {
    let ind = Kernel::indicator(1.0).unwrap();
    assert!((ind.time_integral(0.7, &Interval::new(0.0, 1.0)).unwrap() - 0.7).abs() < 1e-15);
    let ou = Kernel::ou(2.0, 0.0, 0.0, 1.0).unwrap();
    let v = ou.time_integral(1.0, &Interval::new(0.0, 1.0)).unwrap();
    assert!((v - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
    let rou = Kernel::reverse_ou(1.0, 1.0).unwrap();
    let v = rou.time_integral(0.0, &Interval::new(-5.0, 1.0)).unwrap();
    assert!((v - (1.0 - 1.0 / E)).abs() < 1e-15);
}

#[test]
fn linear_frac_order_one_at_zero_exponent_is_indicator() {
    for &alpha in &[0.5, 1.0, 1.7] {
        let k = Kernel::linear_frac(1, 1.0 / alpha, alpha, 1.0).unwrap();
        for &(t, s) in &[(1.0, 0.3), (0.5, -2.0), (0.5, 0.7), (0.4, 0.0)] {
            let expected = if (0.0..t).contains(&s) { 1.0 } else { 0.0 };
            assert_eq!(k.evaluate(t, s), expected, "alpha {alpha} t {t} s {s}");
        }
    }
}

#[test]
fn linear_frac_rejects_outside_admissible_region() {
    let err = Kernel::linear_frac(1, 0.6, 1.0, 1.0).unwrap_err().to_string();
    assert!(err.contains("H−1/α must lie in (n−1, n−1/2)"), "{err}");
    assert!(Kernel::linear_frac(2, 1.2 + 1.0 / 1.5, 1.5, 1.0).is_ok());
    assert!(Kernel::linear_frac(2, 0.4 + 1.0 / 1.5, 1.5, 1.0).is_err());
}

#[test]
fn carma_examples() {
    let single = Kernel::carma(vec![3.0], vec![1.0], 1.0).unwrap();
    let ou_past = |t: f64, s: f64| if s < t { (-3.0 * (t - s)).exp() } else { 0.0 };
    let two = Kernel::carma(vec![3.0, 2.0], vec![1.0], 1.0).unwrap();
    for &(t, s) in &[(1.0, 0.2), (0.5, -3.0), (0.5, 0.9), (0.0, -0.1)] {
        assert!((single.evaluate(t, s) - ou_past(t, s)).abs() < 1e-14);
        let expected = if s < t {
            (-(t - s)).exp() - (-2.0 * (t - s)).exp()
        } else {
            0.0
        };
        assert!((two.evaluate(t, s) - expected).abs() < 1e-14);
    }
    assert!(Kernel::carma(vec![2.0, 1.0], vec![1.0], 1.0).is_err());
}

#[test]
fn exponential_closed_forms_agree_with_quadrature() {
    let kernels = [
        Kernel::ou(1.7, 0.0, 0.0, 2.0).unwrap(),
        Kernel::reverse_ou(0.8, 2.0).unwrap(),
        Kernel::carma(vec![3.0, 2.0], vec![0.5, 1.0], 2.0).unwrap(),
    ];
    for k in &kernels {
        for &(t1, t2) in &[(0.1, 0.4), (0.0, 1.5), (1.2, 1.2001)] {
            for sub in [k.natural_domain(), Interval::new(-1.0, 0.3), Interval::new(0.2, 5.0)] {
                let closed = k.increment_l2(t1, t2, &sub).unwrap();
                let quad = k.increment_l2_quadrature(t1, t2, &sub).unwrap();
                assert!(
                    (closed - quad).abs() <= 1e-9 * closed.max(1e-6),
                    "{}: {closed} vs {quad}",
                    k.id()
                );
            }
        }
        let w = Interval::new(-3.0, 1.5);
        let sq = k.square_integral(1.0, &w).unwrap();
        let cross = k.cross_integral(1.0, 1.0, &w).unwrap();
        assert!((sq - cross).abs() < 1e-9 * sq);
    }
}

#[test]
fn ou_increment_has_minus_sign() {
    // [2(1−q) − e^{−2λt₁}(1−q)²]/(2λ)
    let (lambda, t1, t2) = (1.3, 0.4, 0.9);
    let k = Kernel::ou(lambda, 0.0, 0.0, 1.0).unwrap();
    let q = (-lambda * (t2 - t1)).exp();
    let expected = (2.0 * (1.0 - q) - (-2.0 * lambda * t1).exp() * (1.0 - q).powi(2)) / (2.0 * lambda);
    let got = k.increment_l2(t1, t2, &Interval::new(0.0, 1.0)).unwrap();
    assert!((got - expected).abs() < 1e-15);
}

#[test]
fn ou_offset() {
    let k = Kernel::ou(2.0, 3.0, 1.0, 1.0).unwrap();
    let t: f64 = 0.5;
    assert!((k.offset(t) - ((-1.0f64).exp() + 3.0 * (1.0 - (-1.0f64).exp()))).abs() < 1e-15);
    assert_eq!(Kernel::indicator(1.0).unwrap().offset(0.3), 0.0);
}

#[test]
fn regularity_table() {
    assert!(!Kernel::log_frac(1.0).unwrap().regularity_report().bounded);
    let alpha: f64 = 1.5;
    let rough = Kernel::frac_kha(1.0 / alpha - 0.2, alpha, 1.0, 1.0).unwrap();
    assert!(!rough.regularity_report().bounded);
    let smooth = Kernel::frac_kha(1.0 / alpha + 0.2, alpha, 1.0, 1.0).unwrap();
    let r = smooth.regularity_report();
    assert!(r.bounded && r.square_integrable);
    assert!((r.c1[0] - 1.4).abs() < 1e-12);
    let ou = Kernel::ou(1.0, 0.0, 0.0, 1.0).unwrap().regularity_report();
    assert!(ou.bounded && ou.square_integrable && ou.c1 == vec![1.0]);
    let lf = Kernel::linear_frac(2, 1.25 + 1.0 / alpha, alpha, 1.0)
        .unwrap()
        .regularity_report();
    let (s1, s2) = lf.split.unwrap();
    assert_eq!(
        (s1.lo, s1.hi, s2.lo, s2.hi),
        (f64::NEG_INFINITY, 0.0, 0.0, f64::INFINITY)
    );
    assert_eq!(lf.c1[0], 2.0);
    assert!((lf.c1[1] - 3.5).abs() < 1e-12);
}

#[test]
fn frac_kha_self_similarity() {
    let alpha: f64 = 1.2;
    let k = Kernel::frac_kha(1.0 / alpha + 0.3, alpha, 1.0, 4.0).unwrap();
    let beta = 0.3;
    for &(h, t, s) in &[(0.5, 1.0, 0.4), (1.7, 0.8, 0.1), (2.0, 0.3, 0.29)] {
        let lhs = k.evaluate(h * t, s * h);
        let rhs = h.powf(beta) * k.evaluate(t, s);
        assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs(), "{lhs} vs {rhs}");
    }
}

#[test]
fn custom_kernel_scan() {
    let k = Kernel::custom(
        "ramp",
        |t: f64, s: f64| if s <= t { t - s } else { 0.0 },
        Interval::new(0.0, 1.0),
        1.0,
    )
    .unwrap();
    let r = k.regularity_report();
    assert_eq!(r.method, Method::Numeric);
    assert!(r.bounded && r.square_integrable);
    // ∫(f(t+d)−f(t))² ≈ d² t + d³/3 → slope ≈ 2
    assert!((r.c1[0] - 2.0).abs() < 0.1, "{:?}", r.c1);
    assert_eq!(k.evaluate(0.5, 2.0), 0.0);
}

#[test]
fn spec_round_trip() {
    let text = r#"{"type":"linear_frac","n":2,"H":1.9,"alpha":1.5}"#;
    let spec: KernelSpec = serde_json::from_str(text).unwrap();
    let k = spec.build(1.0).unwrap();
    assert_eq!(KernelSpec::of(&k), Some(spec));
    let ou: KernelSpec = serde_json::from_str(r#"{"type":"ou","lambda":1}"#).unwrap();
    assert_eq!(
        ou,
        KernelSpec::Ou {
            lambda: 1.0,
            mu: 0.0,
            x0: 0.0
        }
    );
    let f: KernelSpec = serde_json::from_str(r#"{"type":"frac_kha","H":1.0,"alpha":1.5}"#).unwrap();
    assert_eq!(
        f,
        KernelSpec::FracKha {
            h: 1.0,
            alpha: 1.5,
            c: 1.0
        }
    );
}
