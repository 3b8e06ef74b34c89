//! Kernels that are finite sums of exponentials on a half line:
//! OU, reverse OU and CARMA.

use nalgebra::DMatrix;

use super::KernelError;
use crate::interval::Interval;

/// Which side of `t` the kernel lives on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Side {
    /// `s ∈ [floor, t)`.
    Before { floor: f64 },
    /// `s ∈ [t, ∞)`.
    After,
}

/// `f(t,s) = Σ_k g_k e^{μ_k (t−s)}` on one side of `t`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ExpSum {
    pub(crate) coeffs: Vec<f64>,
    pub(crate) rates: Vec<f64>,
    pub(crate) side: Side,
}

/// `∫_lo^hi e^{ν(τ−s)} ds`, stable for short ranges and infinite ends.
pub(crate) fn exp_segment(nu: f64, tau: f64, lo: f64, hi: f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    if nu == 0.0 {
        hi - lo
    } else if nu > 0.0 {
        (nu * (tau - lo)).exp() * -(-nu * (hi - lo)).exp_m1() / nu
    } else {
        (nu * (tau - hi)).exp() * (nu * (hi - lo)).exp_m1() / nu
    }
}

impl ExpSum {
    pub(crate) fn support(&self, t: f64) -> Interval {
        match self.side {
            Side::Before { floor } => Interval::new(floor, t),
            Side::After => Interval::new(t, f64::INFINITY),
        }
    }

    pub(crate) fn eval(&self, t: f64, s: f64) -> f64 {
        let inside = match self.side {
            Side::Before { floor } => s >= floor && s < t,
            Side::After => s >= t,
        };
        if !inside {
            return 0.0;
        }
        self.coeffs
            .iter()
            .zip(&self.rates)
            .map(|(g, mu)| g * (mu * (t - s)).exp())
            .sum()
    }

    pub(crate) fn integral(&self, t: f64, window: &Interval) -> f64 {
        let piece = self.support(t).intersect(window);
        self.coeffs
            .iter()
            .zip(&self.rates)
            .map(|(g, mu)| g * exp_segment(*mu, t, piece.lo, piece.hi))
            .sum()
    }

    /// `∫_piece (Σ c_k e^{μ_k(τ−s)})² ds`.
    fn quadratic(&self, coeffs: &[f64], tau: f64, piece: &Interval) -> f64 {
        if piece.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for (cj, mj) in coeffs.iter().zip(&self.rates) {
            for (ck, mk) in coeffs.iter().zip(&self.rates) {
                total += cj * ck * exp_segment(mj + mk, tau, piece.lo, piece.hi);
            }
        }
        total
    }

    pub(crate) fn square_integral(&self, t: f64, window: &Interval) -> f64 {
        self.quadratic(&self.coeffs, t, &self.support(t).intersect(window))
    }

    /// `∫_sub (f(t2,s) − f(t1,s))² ds` for `t1 ≤ t2`.
    pub(crate) fn increment_l2(&self, t1: f64, t2: f64, sub: &Interval) -> f64 {
        let dt = t2 - t1;
        match self.side {
            Side::Before { floor } => {
                // s < t1: both terms present; t1 ≤ s < t2: only f(t2, s).
                let shifted: Vec<f64> = self
                    .coeffs
                    .iter()
                    .zip(&self.rates)
                    .map(|(g, mu)| g * (mu * dt).exp_m1())
                    .collect();
                let early = Interval::new(floor, t1).intersect(sub);
                let late = Interval::new(floor.max(t1), t2).intersect(sub);
                self.quadratic(&shifted, t1, &early) + self.quadratic(&self.coeffs, t2, &late)
            }
            Side::After => {
                // t1 ≤ s < t2: only f(t1, s); s ≥ t2: both.
                let shifted: Vec<f64> = self
                    .coeffs
                    .iter()
                    .zip(&self.rates)
                    .map(|(g, mu)| -g * (-mu * dt).exp_m1())
                    .collect();
                let early = Interval::new(t1, t2).intersect(sub);
                let late = Interval::new(t2, f64::INFINITY).intersect(sub);
                self.quadratic(&self.coeffs, t1, &early) + self.quadratic(&shifted, t2, &late)
            }
        }
    }
}

/// Roots and partial-fraction weights of a CARMA(p, q) kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct CarmaKernel {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub roots: Vec<f64>,
    pub weights: Vec<f64>,
}

fn poly_a(a: &[f64], z: f64) -> (f64, f64) {
    // z^p + a1 z^{p-1} + ... + ap and its derivative, by Horner.
    let mut value = 1.0;
    let mut deriv = 0.0;
    for &c in a {
        deriv = deriv * z + value;
        value = value * z + c;
    }
    (value, deriv)
}

fn poly_b(b: &[f64], z: f64) -> f64 {
    b.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

impl CarmaKernel {
    /// `a = [a₁, …, a_p]` for `a(z) = z^p + a₁z^{p−1} + … + a_p` and
    /// `b = [b₀, …, b_q]` with `b_q = 1`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, KernelError> {
        let p = a.len();
        if p == 0 {
            return Err(KernelError::Carma("autoregressive order p must be at least 1".into()));
        }
        if b.is_empty() || b.len() > p {
            return Err(KernelError::Carma(format!(
                "moving average order q = {} must satisfy 0 ≤ q < p = {p}",
                b.len() as isize - 1
            )));
        }
        if *b.last().unwrap() != 1.0 {
            return Err(KernelError::Carma(format!(
                "leading moving average coefficient b_q must equal 1, got {}",
                b.last().unwrap()
            )));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(KernelError::Carma("coefficients must be finite".into()));
        }
        let companion = DMatrix::from_fn(p, p, |i, j| {
            if i + 1 < p {
                if j == i + 1 {
                    1.0
                } else {
                    0.0
                }
            } else {
                -a[p - 1 - j]
            }
        });
        let eig = companion.complex_eigenvalues();
        let mut roots = Vec::with_capacity(p);
        for z in eig.iter() {
            if z.im.abs() > 1e-8 * z.re.abs().max(1.0) {
                return Err(KernelError::Carma(format!(
                    "root {:.6}{:+.6}i of a(z) is not real",
                    z.re, z.im
                )));
            }
            let mut x = z.re;
            for _ in 0..50 {
                let (v, d) = poly_a(&a, x);
                if d == 0.0 {
                    break;
                }
                let step = v / d;
                x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            roots.push(x);
        }
        roots.sort_by(f64::total_cmp);
        for pair in roots.windows(2) {
            if (pair[1] - pair[0]).abs() <= 1e-8 {
                return Err(KernelError::Carma(format!(
                    "root {:.6} of a(z) is repeated; roots must be distinct",
                    pair[0]
                )));
            }
        }
        if let Some(r) = roots.iter().find(|&&r| r >= 0.0) {
            return Err(KernelError::Carma(format!(
                "root {r:.6} of a(z) is not strictly negative"
            )));
        }
        let weights = roots
            .iter()
            .enumerate()
            .map(|(k, &lk)| {
                let deriv: f64 = roots
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &lj)| lk - lj)
                    .product();
                poly_b(&b, lk) / deriv
            })
            .collect();
        Ok(Self { a, b, roots, weights })
    }

    pub(crate) fn exp_sum(&self) -> ExpSum {
        ExpSum {
            coeffs: self.weights.clone(),
            rates: self.roots.clone(),
            side: Side::Before {
                floor: f64::NEG_INFINITY,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_matches_direct_formula() {
        let (nu, tau, lo, hi): (f64, f64, f64, f64) = (-0.7, 1.0, -2.0, 0.5);
        let direct = ((nu * (tau - lo)).exp() - (nu * (tau - hi)).exp()) / nu;
        assert!((exp_segment(nu, tau, lo, hi) - direct).abs() < 1e-14);
        assert!((exp_segment(2.0, 0.0, 0.0, f64::INFINITY) - 0.5).abs() < 1e-15);
        assert!((exp_segment(-2.0, 0.0, f64::NEG_INFINITY, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn carma_roots_and_weights() {
        let k = CarmaKernel::new(vec![3.0, 2.0], vec![1.0]).unwrap();
        assert!((k.roots[0] + 2.0).abs() < 1e-14 && (k.roots[1] + 1.0).abs() < 1e-14);
        assert!((k.weights[0] + 1.0).abs() < 1e-14 && (k.weights[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn carma_rejections_name_the_root() {
        let err = CarmaKernel::new(vec![2.0, 1.0], vec![1.0]).unwrap_err().to_string();
        assert!(err.contains("-1.0") || err.contains("not real"), "{err}");
        let err = CarmaKernel::new(vec![0.0, 1.0], vec![1.0]).unwrap_err().to_string();
        assert!(err.contains("not real"), "{err}");
        let err = CarmaKernel::new(vec![-1.0], vec![1.0]).unwrap_err().to_string();
        assert!(err.contains("1.000000") && err.contains("negative"), "{err}");
        assert!(CarmaKernel::new(vec![3.0, 2.0], vec![1.0, 2.0]).is_err());
        assert!(CarmaKernel::new(vec![3.0, 2.0], vec![0.5, 2.0, 1.0]).is_err());
    }
}
