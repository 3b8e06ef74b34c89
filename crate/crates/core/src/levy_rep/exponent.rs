//! Lévy exponent of the truncated measure `ν_m`, the law of the jumps with
//! series index at most `m`:
//!
//! `Ψ_m(y) = ∫₀^m E[e^{i⟨y,H(r,U)⟩} − 1] dr − i⟨y, b_m⟩ 1_{centered}`,
//! `b_m = ∫₀^m E[H 1_{(0,1]}(‖H‖)] dr`.

use num_complex::Complex64;

use super::{tempered, LevyRepresentation, RepKind};
use crate::quad::{integrate, integrate_finite, Tolerance};
use crate::special::gamma_cdf_int;

const I: Complex64 = Complex64::new(0.0, 1.0);
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `Γ(−α)` for `α ∈ (0,2) \ {1}`.
fn gamma_neg(alpha: f64) -> f64 {
    statrs::function::gamma::gamma(2.0 - alpha) / (alpha * (alpha - 1.0))
}

/// `∫₀^∞ (e^{iux} − 1 − iux 1_{(0,1]}(x)) x^{−α−1} dx` for `α = 1`, and the
/// same integral with compensation `iux` dropped (`α < 1`) or kept on the
/// whole half line (`α > 1`) otherwise.
fn stable_full(alpha: f64, u: f64) -> Complex64 {
    if (alpha - 1.0).abs() < 1e-12 {
        let a = u.abs();
        Complex64::new(-std::f64::consts::FRAC_PI_2 * a, u * (1.0 - EULER_GAMMA - a.ln()))
    } else {
        let phase = -u.signum() * std::f64::consts::FRAC_PI_2 * alpha;
        Complex64::from_polar(gamma_neg(alpha) * u.abs().powf(alpha), phase)
    }
}

/// `∫₀^{x0} (e^{iux} − 1 − iux) x^{−α−1} dx` by its power series, for `|u| x0 ≤ 1`.
fn small_jump_series(alpha: f64, u: f64, x0: f64) -> Complex64 {
    let z = Complex64::new(0.0, u * x0);
    let mut power = z; // (iux0)^n / n!
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 2..200 {
        power = power * z / n as f64;
        let term = power / (n as f64 - alpha);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    sum * x0.powf(-alpha)
}

/// `∫_z^∞ e^{it} t^{−a−1} dt` for `z > 0`, along the rotated contour
/// `t = z + is`, which turns the oscillation into exponential decay.
fn oscillatory_tail(z: f64, a: f64) -> Complex64 {
    let est = integrate(
        |s: f64| Complex64::new(z, s).powf(-a - 1.0) * (-s).exp(),
        0.0,
        f64::INFINITY,
        Tolerance::new(1e-300, 1e-13),
    );
    I * Complex64::from_polar(1.0, z) * est.value
}

/// `∫_{x0}^∞ (e^{iux} − 1) x^{−α−1} dx`, the stable exponent over the
/// jumps larger than `x0`.
fn stable_large_jumps(alpha: f64, u: f64, x0: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if !x0.is_finite() {
        return Complex64::new(0.0, 0.0);
    }
    let ux = u.abs() * x0;
    if ux > 1.0 {
        let mut osc = oscillatory_tail(ux, alpha) * u.abs().powf(alpha);
        if u < 0.0 {
            osc = osc.conj();
        }
        osc - x0.powf(-alpha) / alpha
    } else {
        let shift = if (alpha - 1.0).abs() < 1e-12 {
            x0.ln()
        } else {
            x0.powf(1.0 - alpha) / (1.0 - alpha)
        };
        stable_full(alpha, u) - small_jump_series(alpha, u, x0) - I * u * shift
    }
}

/// `∫₀^∞ (e^{iux} − 1 − iux) x^{−α−1} e^{−θx} dx`.
fn tempered_full(alpha: f64, theta: f64, u: f64) -> Complex64 {
    let z = Complex64::new(theta, -u);
    if (alpha - 1.0).abs() < 1e-12 {
        z * (z / theta).ln() + I * u
    } else {
        (z.powf(alpha) - theta.powf(alpha) + I * u * alpha * theta.powf(alpha - 1.0)) * gamma_neg(alpha)
    }
}

/// `E_E[e^{iu min(x, cE)} − 1 − iu min(x, cE)]` in closed form.
fn capped_phi(u: f64, x: f64, c: f64) -> Complex64 {
    if c == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let b = x / c;
    if (u * x).abs() < 0.01 {
        let m = |k: u32| c.powi(k as i32) * crate::special::exp_truncated_moment(k, b);
        let u2 = u * u;
        return Complex64::new(-u2 * m(2) / 2.0 + u2 * u2 * m(4) / 24.0, -u2 * u * m(3) / 6.0);
    }
    let w = Complex64::new(1.0, -u * c);
    let below = (Complex64::new(1.0, 0.0) - (-w * b).exp()) / w;
    let above = Complex64::from_polar((-b).exp(), u * x);
    below + above - 1.0 - I * u * c * gamma_cdf_int(1, b)
}

/// Compensated tempered exponent over the jumps of size at most `x0`, per unit atom weight:
/// `α ∫₀^{x0} x^{−α−1} E_V[φ(x, c(V))] dx`.
fn tempered_small_jumps(alpha: f64, theta: f64, u: f64, x0: f64) -> Complex64 {
    let inner = |x: f64| -> Complex64 {
        integrate_finite(
            |v: f64| capped_phi(u, x, v.powf(1.0 / alpha) / theta),
            0.0,
            1.0,
            Tolerance::new(1e-300, 1e-10),
        )
        .value
    };
    let est = integrate(
        |x: f64| {
            if x == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                inner(x) * (alpha * x.powf(-alpha - 1.0))
            }
        },
        0.0,
        x0,
        Tolerance::new(1e-300, 1e-9),
    );
    est.value
}

impl LevyRepresentation {
    /// `∫₀^m E[e^{i⟨y,H(r,U)⟩} − 1] dr`, uncompensated.
    pub fn jump_exponent(&self, m: f64, y: &[f64]) -> Complex64 {
        assert_eq!(y.len(), self.dim, "frequency has wrong dimension");
        if m <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let project = |xi: &[f64]| -> f64 { xi.iter().zip(y).map(|(a, b)| a * b).sum() };
        match &self.kind {
            RepKind::Gamma { a, beta } => {
                let v = y[0];
                let x0 = (-m / a).exp();
                let one = Complex64::new(1.0, 0.0);
                -(*a) * ((one - I * v / beta).ln() - (one - I * v * x0 / beta).ln())
            }
            RepKind::ExponentialCp => {
                let mm = m.min(1.0);
                let w = Complex64::new(1.0, -y[0]);
                Complex64::from_polar(mm, -y[0] * mm.ln()) / w - mm
            }
            RepKind::Stable { alpha, atoms } => {
                let x0 = (m / self.total_weight).powf(-1.0 / alpha);
                atoms
                    .iter()
                    .map(|atom| stable_large_jumps(*alpha, project(&atom.xi), x0) * (atom.weight * alpha))
                    .sum()
            }
            RepKind::TemperedStable { alpha, atoms } => {
                let l = self.total_weight;
                let x0 = (m / l).powf(-1.0 / alpha);
                atoms
                    .iter()
                    .map(|atom| {
                        let u = project(&atom.xi);
                        if u == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        let full = tempered_full(*alpha, atom.theta, u);
                        let small = tempered_small_jumps(*alpha, atom.theta, u, x0);
                        let mean = integrate(
                            |r: f64| {
                                if r == 0.0 {
                                    tempered::mean_at(*alpha, atom.theta, f64::INFINITY)
                                } else {
                                    tempered::mean_at(*alpha, atom.theta, (r / l).powf(-1.0 / alpha))
                                }
                            },
                            0.0,
                            m,
                            Tolerance::new(1e-300, 1e-10),
                        )
                        .value;
                        (full - small) * (atom.weight * alpha) + I * u * (atom.weight / l * mean)
                    })
                    .sum()
            }
        }
    }

    /// Lévy exponent of the simulated truncated law at frequency `y`, with
    /// the centering convention of [`LevyRepresentation::uses_centering`].
    pub fn truncated_exponent(&self, m: f64, y: &[f64]) -> Complex64 {
        let mut psi = self.jump_exponent(m, y);
        if self.uses_centering() {
            let b = self.center_integral(0.0, m);
            let drift: f64 = b.iter().zip(y).map(|(a, b)| a * b).sum();
            psi -= I * drift;
        }
        psi
    }
}
