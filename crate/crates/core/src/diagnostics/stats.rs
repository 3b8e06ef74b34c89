//! Goodness-of-fit and tail statistics on plain samples.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::DiagError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF, with the
/// asymptotic p-value under Stephens' small-sample correction.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let en = n.sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    }
}

/// One-sided Mann–Whitney test of `H₁: a` stochastically larger than `b`,
/// normal approximation with tie correction.
pub fn mann_whitney_greater(a: &[f64], b: &[f64]) -> TestResult {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    all.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for item in &all[i..=j] {
            if item.1 {
                rank_sum_a += avg;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    let n = na + nb;
    let mean = na * nb / 2.0;
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let z = (u - mean) / var.sqrt();
    let normal = Normal::standard();
    TestResult {
        statistic: u,
        p_value: 1.0 - normal.cdf(z),
    }
}

/// Mardia's multivariate skewness test; `data[i]` is one observation.
pub fn mardia_skewness(data: &[Vec<f64>]) -> Result<TestResult, DiagError> {
    let n = data.len();
    let d = data.first().map_or(0, Vec::len);
    if n < 10 || d == 0 {
        return Err(DiagError::TooFewSamples { needed: 10, got: n });
    }
    let mean: Vec<f64> = (0..d)
        .map(|k| data.iter().map(|x| x[k]).sum::<f64>() / n as f64)
        .collect();
    let centered: Vec<nalgebra::DVector<f64>> = data
        .iter()
        .map(|x| nalgebra::DVector::from_iterator(d, x.iter().zip(&mean).map(|(a, b)| a - b)))
        .collect();
    let mut cov = nalgebra::DMatrix::zeros(d, d);
    for c in &centered {
        cov += c * c.transpose();
    }
    cov /= n as f64;
    let inv = cov
        .try_inverse()
        .ok_or_else(|| DiagError::Singular("sample covariance".into()))?;
    let projected: Vec<nalgebra::DVector<f64>> = centered.iter().map(|c| &inv * c).collect();
    let mut b1 = 0.0;
    for ci in &centered {
        for pj in &projected {
            b1 += ci.dot(pj).powi(3);
        }
    }
    b1 /= (n * n) as f64;
    let stat = n as f64 * b1 / 6.0;
    let df = (d * (d + 1) * (d + 2)) as f64 / 6.0;
    let chi = ChiSquared::new(df).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic: stat,
        p_value: 1.0 - chi.cdf(stat),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct HillEstimate {
    pub alpha_hat: f64,
    pub se: f64,
    pub k: usize,
}

/// Hill estimator on the `k = ⌊top_fraction · n⌋` largest observations,
/// `α̂ = k / Σ_{i≤k} ln(x_(i) / x_(k+1))`, standard error `α̂/√k`.
pub fn hill(samples: &[f64], top_fraction: f64) -> Result<HillEstimate, DiagError> {
    if samples.len() < 1000 {
        return Err(DiagError::TooFewSamples {
            needed: 1000,
            got: samples.len(),
        });
    }
    if !(top_fraction > 0.01 && top_fraction < 0.2) {
        return Err(DiagError::Parameter(format!(
            "top_fraction must lie in (0.01, 0.2), got {top_fraction}"
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    let k = (top_fraction * xs.len() as f64).floor() as usize;
    let threshold = xs[k];
    if !(threshold > 0.0) {
        return Err(DiagError::Parameter(format!(
            "top order statistics must be positive, found threshold {threshold}"
        )));
    }
    let sum: f64 = xs[..k].iter().map(|x| (x / threshold).ln()).sum();
    let alpha_hat = k as f64 / sum;
    Ok(HillEstimate {
        alpha_hat,
        se: alpha_hat / (k as f64).sqrt(),
        k,
    })
}

/// Chi-square goodness of fit of integer counts to Poisson(`mean`),
/// merging tail cells until every expected count is at least 5.
pub fn poisson_chi_square(counts: &[usize], mean: f64) -> TestResult {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let pmf = |k: usize| -> f64 {
        let lk = k as f64 * mean.ln() - mean - statrs::function::gamma::ln_gamma(k as f64 + 1.0);
        lk.exp()
    };
    let mut observed = vec![0usize; max + 2];
    for &c in counts {
        observed[c] += 1;
    }
    // Cells: [0, a], a+1, ..., [b, ∞)
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut cum = 0.0;
    for (k, o) in observed.iter().enumerate().take(max + 1) {
        let p = pmf(k);
        cum += p;
        obs += *o as f64;
        exp += n * p;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    let tail = n * (1.0 - cum).max(0.0);
    obs += 0.0;
    exp += tail;
    if let Some(last) = cells.last_mut() {
        if exp < 5.0 {
            last.0 += obs;
            last.1 += exp;
        } else {
            cells.push((obs, exp));
        }
    } else {
        cells.push((obs, exp));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = (cells.len() as f64 - 1.0).max(1.0);
    let chi = ChiSquared::new(df).expect("positive degrees of freedom");
    TestResult {
        statistic: stat,
        p_value: 1.0 - chi.cdf(stat),
    }
}

/// Least squares slope of `(x, y)` points.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance and the standard error of that estimate
/// (from the fourth central moment).
pub fn variance_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    (var, ((m4 - m2 * m2) / n).max(0.0).sqrt())
}

/// Pearson correlation with its approximate standard error `(1 − r²)/√(n−1)`.
pub fn correlation(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    let r = if saa > 0.0 && sbb > 0.0 {
        sab / (saa * sbb).sqrt()
    } else {
        0.0
    };
    (r, (1.0 - r * r) / (n - 1.0).sqrt())
}
