//! Deterministic kernels `f(t, s)` together with the metadata the
//! simulator and the diagnostics rely on: support, natural time domain,
//! time integrals, `L²` increments and a regularity report.
//!
//! All kernels are scalar and act componentwise on `R^d` jumps.

mod exponential;
mod fractional;
mod spec;

pub use exponential::CarmaKernel;
pub use fractional::{FracKha, LinearFrac};
pub use spec::KernelSpec;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::interval::Interval;
use crate::quad::{integrate_with_breaks, Tolerance};
use exponential::{ExpSum, Side};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("{0}")]
    OutOfRange(String),
    #[error("CARMA kernel: {0}")]
    Carma(String),
    #[error("horizon T must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("integral over {window} diverges or is infinite")]
    Divergent { window: Interval },
    #[error("quadrature did not reach tolerance (estimate {value}, error {error})")]
    Inaccurate { value: f64, error: f64 },
}

/// How a regularity verdict was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Regularity {
    pub bounded: bool,
    pub square_integrable: bool,
    /// Hölder-type exponent `c₁` of the `L²` increment, one per subdomain.
    pub c1: Vec<f64>,
    pub split: Option<(Interval, Interval)>,
    pub method: Method,
}

/// User supplied kernel; regularity comes from a numeric scan.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub domain: Interval,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum KernelFamily {
    Indicator,
    Ou { lambda: f64, mu: f64, x0: f64 },
    ReverseOu { lambda: f64 },
    FracKha(FracKha),
    LinearFrac(LinearFrac),
    Carma(CarmaKernel),
    LogFrac,
    Custom(CustomKernel),
}

#[derive(Clone, Debug)]
pub struct Kernel {
    family: KernelFamily,
    horizon: f64,
    exp: Option<ExpSum>,
    quad_tol: f64,
}

fn check_positive(name: &str, value: f64) -> Result<(), KernelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(KernelError::OutOfRange(format!("{name} must be positive, got {value}")))
    }
}

fn check_alpha(alpha: f64) -> Result<(), KernelError> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(KernelError::OutOfRange(format!(
            "alpha must lie in (0, 2), got {alpha}"
        )))
    }
}

impl Kernel {
    fn build(family: KernelFamily, horizon: f64) -> Result<Self, KernelError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(KernelError::Horizon(horizon));
        }
        let exp = match &family {
            KernelFamily::Ou { lambda, .. } => Some(ExpSum {
                coeffs: vec![1.0],
                rates: vec![-lambda],
                side: Side::Before { floor: 0.0 },
            }),
            KernelFamily::ReverseOu { lambda } => Some(ExpSum {
                coeffs: vec![1.0],
                rates: vec![*lambda],
                side: Side::After,
            }),
            KernelFamily::Carma(c) => Some(c.exp_sum()),
            _ => None,
        };
        Ok(Self {
            family,
            horizon,
            exp,
            quad_tol: 1e-8,
        })
    }

    /// `1_{[0,t]}(s)`: the Lévy process itself.
    pub fn indicator(horizon: f64) -> Result<Self, KernelError> {
        Self::build(KernelFamily::Indicator, horizon)
    }

    /// `e^{−λ(t−s)} 1_{[0,t)}(s)` plus the deterministic part
    /// `e^{−λt} x0 + μ(1 − e^{−λt})` of the OU solution.
    pub fn ou(lambda: f64, mu: f64, x0: f64, horizon: f64) -> Result<Self, KernelError> {
        check_positive("lambda", lambda)?;
        if !(mu.is_finite() && x0.is_finite()) {
            return Err(KernelError::OutOfRange("mu and x0 must be finite".into()));
        }
        Self::build(KernelFamily::Ou { lambda, mu, x0 }, horizon)
    }

    /// `e^{−λ(s−t)} 1_{[t,∞)}(s)`.
    pub fn reverse_ou(lambda: f64, horizon: f64) -> Result<Self, KernelError> {
        check_positive("lambda", lambda)?;
        Self::build(KernelFamily::ReverseOu { lambda }, horizon)
    }

    /// `H − 1/α` must lie in `(−1/2, 1/2)`; negative values give an
    /// unbounded kernel, which is constructible but refused by the simulator.
    pub fn frac_kha(h: f64, alpha: f64, c: f64, horizon: f64) -> Result<Self, KernelError> {
        check_alpha(alpha)?;
        if !c.is_finite() || c == 0.0 {
            return Err(KernelError::OutOfRange(format!(
                "c must be finite and nonzero, got {c}"
            )));
        }
        let beta = h - 1.0 / alpha;
        if !(beta > -0.5 && beta < 0.5) {
            return Err(KernelError::OutOfRange(format!(
                "H−1/α must lie in (−1/2, 1/2), got {beta}"
            )));
        }
        Self::build(KernelFamily::FracKha(FracKha::new(h, alpha, c)), horizon)
    }

    /// Requires `H − 1/α ∈ (n−1, n−1/2)`, or `H = 1/α` with `n = 1`, where
    /// the kernel reduces to the indicator.
    pub fn linear_frac(n: u32, h: f64, alpha: f64, horizon: f64) -> Result<Self, KernelError> {
        check_alpha(alpha)?;
        if n == 0 {
            return Err(KernelError::OutOfRange("order n must be at least 1".into()));
        }
        let beta = h - 1.0 / alpha;
        let lo = n as f64 - 1.0;
        let admissible = (beta > lo && beta < lo + 0.5) || (n == 1 && beta == 0.0);
        if !admissible {
            return Err(KernelError::OutOfRange(format!(
                "H−1/α must lie in (n−1, n−1/2) = ({lo}, {}), got {beta}",
                lo + 0.5
            )));
        }
        Self::build(KernelFamily::LinearFrac(LinearFrac::new(n, h, alpha)), horizon)
    }

    pub fn carma(a: Vec<f64>, b: Vec<f64>, horizon: f64) -> Result<Self, KernelError> {
        Self::build(KernelFamily::Carma(CarmaKernel::new(a, b)?), horizon)
    }

    /// `ln|t−s| − ln|s|`: square integrable but unbounded.
    pub fn log_frac(horizon: f64) -> Result<Self, KernelError> {
        Self::build(KernelFamily::LogFrac, horizon)
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        domain: Interval,
        horizon: f64,
    ) -> Result<Self, KernelError> {
        Self::build(
            KernelFamily::Custom(CustomKernel {
                name: name.into(),
                f: Arc::new(f),
                domain,
            }),
            horizon,
        )
    }

    /// Relative tolerance of the quadrature fallbacks (default `1e-8`).
    pub fn with_quadrature_tol(mut self, rel: f64) -> Self {
        self.quad_tol = rel;
        self
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn id(&self) -> String {
        match &self.family {
            KernelFamily::Indicator => "indicator".into(),
            KernelFamily::Ou { lambda, mu, x0 } => format!("ou(lambda={lambda},mu={mu},x0={x0})"),
            KernelFamily::ReverseOu { lambda } => format!("reverse_ou(lambda={lambda})"),
            KernelFamily::FracKha(k) => format!("frac_kha(H={},alpha={},c={})", k.h, k.alpha, k.c),
            KernelFamily::LinearFrac(k) => format!("linear_frac(n={},H={},alpha={})", k.n, k.h, k.alpha),
            KernelFamily::Carma(k) => format!("carma(a={:?},b={:?})", k.a, k.b),
            KernelFamily::LogFrac => "log_frac".into(),
            KernelFamily::Custom(k) => format!("custom({})", k.name),
        }
    }

    /// `f(t, s)`; `t` is expected in `[0, T]`.
    pub fn evaluate(&self, t: f64, s: f64) -> f64 {
        if let Some(e) = &self.exp {
            return e.eval(t, s);
        }
        match &self.family {
            KernelFamily::Indicator => {
                if (0.0..=t).contains(&s) {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::FracKha(k) => k.eval(t, s),
            KernelFamily::LinearFrac(k) => k.eval(t, s),
            KernelFamily::LogFrac => fractional::log_frac_eval(t, s),
            KernelFamily::Custom(k) => {
                if k.domain.contains(s) {
                    (k.f)(t, s)
                } else {
                    0.0
                }
            }
            _ => unreachable!(),
        }
    }

    /// Deterministic additive part of the process at time `t` (nonzero
    /// only for the OU solution).
    pub fn offset(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Ou { lambda, mu, x0 } => {
                let decay = (-lambda * t).exp();
                decay * x0 - mu * (-lambda * t).exp_m1()
            }
            _ => 0.0,
        }
    }

    /// Interval outside of which `f(t, ·)` vanishes.
    pub fn support(&self, t: f64) -> Interval {
        if let Some(e) = &self.exp {
            return e.support(t);
        }
        match &self.family {
            KernelFamily::Indicator | KernelFamily::FracKha(_) => Interval::new(0.0, t),
            KernelFamily::LinearFrac(_) => Interval::new(f64::NEG_INFINITY, t),
            KernelFamily::LogFrac => Interval::REAL_LINE,
            KernelFamily::Custom(k) => k.domain,
            _ => unreachable!(),
        }
    }

    /// The time domain `T` of the stochastic integral.
    pub fn natural_domain(&self) -> Interval {
        let t = self.horizon;
        match &self.family {
            KernelFamily::Indicator | KernelFamily::Ou { .. } | KernelFamily::FracKha(_) => Interval::new(0.0, t),
            KernelFamily::Carma(_) => Interval::new(f64::NEG_INFINITY, t),
            KernelFamily::ReverseOu { .. } | KernelFamily::LinearFrac(_) | KernelFamily::LogFrac => Interval::REAL_LINE,
            KernelFamily::Custom(k) => k.domain,
        }
    }

    /// Points where `f(·, ·)` has kinks or singularities in `s`.
    fn breaks(&self, times: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0];
        out.extend_from_slice(times);
        out
    }

    fn quadrature(&self, g: impl Fn(f64) -> f64, window: &Interval, times: &[f64]) -> Result<f64, KernelError> {
        let est = integrate_with_breaks(
            g,
            window.lo,
            window.hi,
            &self.breaks(times),
            Tolerance::new(1e-14, self.quad_tol).with_limit(20_000),
        );
        if !est.value.is_finite() {
            return Err(KernelError::Divergent { window: *window });
        }
        if !est.converged && est.error > 1e3 * self.quad_tol * est.value.abs().max(1e-12) {
            return Err(KernelError::Inaccurate {
                value: est.value,
                error: est.error,
            });
        }
        Ok(est.value)
    }

    /// `∫_window f(t, s) ds`.
    pub fn time_integral(&self, t: f64, window: &Interval) -> Result<f64, KernelError> {
        let piece = self.support(t).intersect(window);
        if piece.is_empty() {
            return Ok(0.0);
        }
        let value = if let Some(e) = &self.exp {
            e.integral(t, &piece)
        } else {
            match &self.family {
                KernelFamily::Indicator => piece.len(),
                KernelFamily::LinearFrac(k) => k.integral(t, piece.lo, piece.hi),
                KernelFamily::LogFrac => fractional::log_frac_integral(t, piece.lo, piece.hi),
                _ => {
                    if !piece.is_finite() {
                        return Err(KernelError::Divergent { window: piece });
                    }
                    self.quadrature(|s| self.evaluate(t, s), &piece, &[t])?
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(KernelError::Divergent { window: piece })
        }
    }

    /// `∫_window f(t, s)² ds`.
    pub fn square_integral(&self, t: f64, window: &Interval) -> Result<f64, KernelError> {
        let piece = self.support(t).intersect(window);
        if piece.is_empty() {
            return Ok(0.0);
        }
        match (&self.exp, &self.family) {
            (Some(e), _) => Ok(e.square_integral(t, &piece)),
            (None, KernelFamily::Indicator) => Ok(piece.len()),
            _ => self.quadrature(|s| self.evaluate(t, s).powi(2), &piece, &[t]),
        }
    }

    /// `∫_window f(t1, s) f(t2, s) ds`.
    pub fn cross_integral(&self, t1: f64, t2: f64, window: &Interval) -> Result<f64, KernelError> {
        let piece = self.support(t1).intersect(&self.support(t2)).intersect(window);
        if piece.is_empty() {
            return Ok(0.0);
        }
        self.quadrature(|s| self.evaluate(t1, s) * self.evaluate(t2, s), &piece, &[t1, t2])
    }

    /// `∫_sub (f(t2,s) − f(t1,s))² ds`, in closed form for the exponential
    /// families and the indicator.
    pub fn increment_l2(&self, t1: f64, t2: f64, sub: &Interval) -> Result<f64, KernelError> {
        let (t1, t2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        if let Some(e) = &self.exp {
            let v = e.increment_l2(t1, t2, sub);
            return if v.is_finite() {
                Ok(v)
            } else {
                Err(KernelError::Divergent { window: *sub })
            };
        }
        if let KernelFamily::Indicator = self.family {
            return Ok(Interval::new(t1.max(0.0), t2).intersect(sub).len());
        }
        self.increment_l2_quadrature(t1, t2, sub)
    }

    /// Always-numeric version of [`Kernel::increment_l2`].
    pub fn increment_l2_quadrature(&self, t1: f64, t2: f64, sub: &Interval) -> Result<f64, KernelError> {
        let (t1, t2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let s1 = self.support(t1);
        let s2 = self.support(t2);
        let hull = Interval::new(s1.lo.min(s2.lo), s1.hi.max(s2.hi));
        let piece = hull.intersect(sub);
        if piece.is_empty() {
            return Ok(0.0);
        }
        let sq = |s: f64| (self.evaluate(t2, s) - self.evaluate(t1, s)).powi(2);
        let est = integrate_with_breaks(
            sq,
            piece.lo,
            piece.hi,
            &self.breaks(&[t1, t2]),
            Tolerance::new(1e-300, 1e-10).with_limit(20_000),
        );
        if !est.value.is_finite() || est.value > 1e100 {
            return Err(KernelError::Divergent { window: piece });
        }
        Ok(est.value)
    }

    /// Analytic regularity for the built-in families, numeric scan otherwise.
    pub fn regularity_report(&self) -> Regularity {
        let analytic = |bounded, square_integrable, c1: Vec<f64>, split| Regularity {
            bounded,
            square_integrable,
            c1,
            split,
            method: Method::Analytic,
        };
        match &self.family {
            KernelFamily::Indicator
            | KernelFamily::Ou { .. }
            | KernelFamily::ReverseOu { .. }
            | KernelFamily::Carma(_) => analytic(true, true, vec![1.0], None),
            // For β > 0 the kernel still grows like s^{−β} as s → 0+; that
            // singularity is integrable and does not affect sample
            // boundedness, which is what this flag gates.
            KernelFamily::FracKha(k) => analytic(k.beta >= 0.0, true, vec![2.0 * k.beta + 1.0], None),
            KernelFamily::LinearFrac(k) => {
                if k.n == 1 {
                    analytic(true, true, vec![2.0 * k.beta + 1.0], None)
                } else {
                    analytic(
                        true,
                        true,
                        vec![2.0, 2.0 * k.beta + 1.0],
                        Some((Interval::new(f64::NEG_INFINITY, 0.0), Interval::new(0.0, f64::INFINITY))),
                    )
                }
            }
            KernelFamily::LogFrac => analytic(false, true, vec![1.0], None),
            KernelFamily::Custom(_) => self.numeric_regularity(),
        }
    }

    /// Heuristic scan: `10⁴` points in `s` for each of `10²` times.
    fn numeric_regularity(&self) -> Regularity {
        let domain = self.natural_domain();
        let reach = 10.0 * self.horizon.max(1.0);
        let lo = domain.lo.max(-reach);
        let hi = domain.hi.min(reach + self.horizon);
        let (ns, nt) = (10_000, 100);
        let ds = (hi - lo) / ns as f64;
        let mut sup = 0.0f64;
        let mut max_l2 = 0.0f64;
        for j in 1..=nt {
            let t = self.horizon * j as f64 / nt as f64;
            let mut l2 = 0.0;
            for i in 0..ns {
                let s = lo + (i as f64 + 0.5) * ds;
                let v = self.evaluate(t, s);
                if !v.is_finite() {
                    sup = f64::INFINITY;
                    continue;
                }
                sup = sup.max(v.abs());
                l2 += v * v * ds;
            }
            max_l2 = max_l2.max(l2);
        }
        // Increment exponent from the log-log slope over small steps at t1 = T/2.
        let t1 = 0.5 * self.horizon;
        let steps = [1e-3, 3e-3, 1e-2, 3e-2].map(|d| d * self.horizon);
        let points: Vec<(f64, f64)> = steps
            .iter()
            .filter_map(|&d| {
                self.increment_l2_quadrature(t1, t1 + d, &domain)
                    .ok()
                    .filter(|v| *v > 0.0)
                    .map(|v| (d.ln(), v.ln()))
            })
            .collect();
        let c1 = crate::diagnostics::stats::ols_slope(&points).unwrap_or(f64::NAN);
        Regularity {
            bounded: sup.is_finite() && sup < 1e8,
            square_integrable: max_l2.is_finite() && max_l2 < 1e100,
            c1: vec![c1],
            split: None,
            method: Method::Numeric,
        }
    }
}

#[cfg(test)]
mod tests;
