//! Fractional kernels: the `K_{H,α}` kernel on `[0, T]`, the `n`-th order
//! linear fractional moving average kernel and the log-fractional kernel.

use statrs::function::gamma::gamma;

use crate::quad::{integrate_with_breaks, Tolerance};
use crate::special::positive_power;

/// `K_{H,α}(t,s) = c[(t/s)^β (t−s)^β − β s^{−β} ∫_s^t u^{β−1}(u−s)^β du] 1_{[0,t)}(s)`
/// with `β = H − 1/α`.
#[derive(Clone, Debug, PartialEq)]
pub struct FracKha {
    pub h: f64,
    pub alpha: f64,
    pub c: f64,
    pub(crate) beta: f64,
}

impl FracKha {
    pub(crate) fn new(h: f64, alpha: f64, c: f64) -> Self {
        Self {
            h,
            alpha,
            c,
            beta: h - 1.0 / alpha,
        }
    }

    /// `∫_s^t u^{β−1}(u−s)^β du` after `u = s + v²`, which removes the
    /// algebraic endpoint behaviour at `u = s`.
    fn inner(&self, t: f64, s: f64) -> f64 {
        let beta = self.beta;
        let top = (t - s).sqrt();
        let est = integrate_with_breaks(
            |v: f64| {
                if v == 0.0 {
                    return 0.0;
                }
                2.0 * (s + v * v).powf(beta - 1.0) * v.powf(2.0 * beta + 1.0)
            },
            0.0,
            top,
            &[s.sqrt()],
            Tolerance::new(1e-300, 1e-12),
        );
        est.value
    }

    pub(crate) fn eval(&self, t: f64, s: f64) -> f64 {
        if !(s > 0.0 && s < t) {
            return 0.0;
        }
        let beta = self.beta;
        if beta == 0.0 {
            return self.c;
        }
        let lead = (t / s).powf(beta) * (t - s).powf(beta);
        self.c * (lead - beta * s.powf(-beta) * self.inner(t, s))
    }
}

/// `f_n(t,s) = [(t−s)_+^β − Σ_{k<n} C(β,k) t^k (−s)_+^{β−k}] / Γ(β+1)`, `β = H − 1/α`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFrac {
    pub n: u32,
    pub h: f64,
    pub alpha: f64,
    pub(crate) beta: f64,
    norm: f64,
    binom: Vec<f64>,
}

/// Generalized binomial coefficients `C(β, k)` for `k < len` by the
/// product recurrence, which keeps signs exact.
fn binomials(beta: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut c = 1.0;
    for k in 0..len {
        out.push(c);
        c *= (beta - k as f64) / (k + 1) as f64;
    }
    out
}

impl LinearFrac {
    pub(crate) fn new(n: u32, h: f64, alpha: f64) -> Self {
        let beta = h - 1.0 / alpha;
        Self {
            n,
            h,
            alpha,
            beta,
            // exact at β = 0, where the kernel is the indicator
            norm: if beta == 0.0 { 1.0 } else { 1.0 / gamma(beta + 1.0) },
            binom: binomials(beta, n as usize),
        }
    }

    pub(crate) fn eval(&self, t: f64, s: f64) -> f64 {
        if !(s < t) {
            return 0.0;
        }
        let beta = self.beta;
        if s >= 0.0 {
            return self.norm * positive_power(t - s, beta);
        }
        let a = -s;
        let x = t / a;
        if x < 0.5 && t > 0.0 {
            // (t + a)^β minus its first n binomial terms: the remaining
            // series avoids cancelling large powers of a.
            let mut c = self.binom[self.n as usize - 1] * (beta - (self.n - 1) as f64) / self.n as f64;
            let mut xk = x.powi(self.n as i32);
            let mut sum = 0.0;
            let mut k = self.n as f64;
            loop {
                let term = c * xk;
                sum += term;
                if term.abs() <= 1e-17 * sum.abs() || k > 400.0 {
                    break;
                }
                c *= (beta - k) / (k + 1.0);
                xk *= x;
                k += 1.0;
            }
            return self.norm * a.powf(beta) * sum;
        }
        let mut value = positive_power(t - s, beta);
        let mut tk = 1.0;
        for (k, c) in self.binom.iter().enumerate() {
            value -= c * tk * positive_power(a, beta - k as f64);
            tk *= t;
        }
        self.norm * value
    }

    /// Exact `∫_lo^hi f_n(t,s) ds` from power antiderivatives.
    pub(crate) fn integral(&self, t: f64, lo: f64, hi: f64) -> f64 {
        let beta = self.beta;
        let hi = hi.min(t);
        if !(hi > lo) {
            return 0.0;
        }
        let lead = (positive_power(t - lo, beta + 1.0) - positive_power(t - hi, beta + 1.0)) / (beta + 1.0);
        let mut tail = 0.0;
        let mut tk = 1.0;
        for (k, c) in self.binom.iter().enumerate() {
            let p = beta - k as f64 + 1.0;
            tail += c * tk * (positive_power(-lo, p) - positive_power(-hi, p)) / p;
            tk *= t;
        }
        self.norm * (lead - tail)
    }
}

/// `ln|t−s| − ln|s|`; its antiderivative pieces use `F(x) = x ln|x| − x`.
pub(crate) fn log_frac_eval(t: f64, s: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    (t - s).abs().ln() - s.abs().ln()
}

pub(crate) fn log_frac_integral(t: f64, lo: f64, hi: f64) -> f64 {
    let f = |x: f64| if x == 0.0 { 0.0 } else { x * x.abs().ln() - x };
    if t == 0.0 || !(hi > lo) {
        return 0.0;
    }
    (f(t - lo) - f(t - hi)) - (f(hi) - f(lo))
}
