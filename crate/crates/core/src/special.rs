//! Numerically careful elementary combinations used by several modules.

/// `P(Gamma(k, 1) <= b)`, the regularized lower incomplete gamma function
/// at integer shape, without cancellation for small `b`.
pub fn gamma_cdf_int(k: u32, b: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    if b.is_infinite() {
        return 1.0;
    }
    if b < 1.0 {
        // e^{-b} Σ_{j≥k} b^j / j!
        let mut term = 1.0;
        for j in 1..=k {
            term *= b / j as f64;
        }
        let mut sum: f64 = 0.0;
        let mut j = k;
        while term > 1e-18 * sum.max(f64::MIN_POSITIVE) {
            sum += term;
            j += 1;
            term *= b / j as f64;
        }
        (-b).exp() * sum
    } else {
        let mut term = 1.0;
        let mut sum = 0.0;
        for j in 0..k {
            sum += term;
            term *= b / (j + 1) as f64;
        }
        1.0 - (-b).exp() * sum
    }
}

/// `E[min(b, E)^k]` for a standard exponential `E`.
pub fn exp_truncated_moment(k: u32, b: f64) -> f64 {
    let factorial: f64 = (1..=k).map(f64::from).product();
    factorial * gamma_cdf_int(k, b)
}

/// `E[E · 1(E <= b)] = 1 - e^{-b}(1 + b)` for a standard exponential `E`.
pub fn exp_partial_mean(b: f64) -> f64 {
    gamma_cdf_int(2, b)
}

/// `x^p` with the zero-power convention `x^0 = 1` for `x > 0`, and `0` for `x <= 0`.
pub fn positive_power(x: f64, p: f64) -> f64 {
    if x > 0.0 {
        if p == 0.0 {
            1.0
        } else {
            x.powf(p)
        }
    } else {
        0.0
    }
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}
