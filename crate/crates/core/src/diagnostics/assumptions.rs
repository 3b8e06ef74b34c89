use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::stats::mean_se;
use super::DiagError;
use crate::interval::Interval;
use crate::kernels::{Kernel, Method};
use crate::levy_rep::{FactoredCovariance, LevyRepresentation, Mark, RepKind};
use crate::quad::{integrate_finite, Tolerance};
use crate::simulator::{component_seed, path_rng, Component};

pub const SCHEMA: &str = "idpath-diag/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub value: f64,
    pub method: Method,
    /// Outcome of the numeric scan when an analytic verdict overrides it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric_status: Option<Status>,
}

impl Verdict {
    fn analytic(pass: bool, value: f64) -> Self {
        Self {
            status: if pass { Status::Pass } else { Status::Fail },
            value,
            method: Method::Analytic,
            numeric_status: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubdomainC1 {
    pub domain: Interval,
    pub c1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub schema: &'static str,
    pub rep_id: String,
    pub kernel_id: String,
    pub assumption_2a: Verdict,
    pub assumption_2b: Verdict,
    pub assumption_2c: Verdict,
    pub assumption_3a: Verdict,
    pub assumption_3b: Verdict,
    pub regularity_c1: Vec<SubdomainC1>,
    pub m_grid: Vec<f64>,
    pub kappa_grid: Vec<f64>,
    /// `tr σ_m²` along `m_grid`.
    pub sigma_trace: Vec<f64>,
    /// Monte Carlo estimates of the Lindeberg-type tail integral, `[m][κ]`.
    pub lindeberg: Vec<Vec<f64>>,
    pub lindeberg_se: Vec<Vec<f64>>,
    pub cf_distance: Option<f64>,
    pub normality_p: Option<f64>,
    pub tail_alpha_hat: Option<super::HillEstimate>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssumptionOptions {
    /// Marks drawn for the tail integral.
    pub n_marks: usize,
    pub seed: u64,
    /// The tail integral must fall below this by the largest `m`.
    pub threshold: f64,
}

impl Default for AssumptionOptions {
    fn default() -> Self {
        Self {
            n_marks: 4000,
            seed: 0,
            threshold: 1e-3,
        }
    }
}

/// `max_{t,s} |f(t,s)|` on a coarse grid; informative only.
fn kernel_sup_scan(kernel: &Kernel) -> f64 {
    let horizon = kernel.horizon();
    let domain = kernel.natural_domain();
    let lo = domain.lo.max(-2.0 * horizon);
    let hi = domain.hi.min(2.0 * horizon);
    let (nt, ns) = (20, 400);
    let ds = (hi - lo) / ns as f64;
    let mut sup = 0.0f64;
    for j in 1..=nt {
        let t = horizon * j as f64 / nt as f64;
        for i in 0..ns {
            let v = kernel.evaluate(t, lo + (i as f64 + 0.5) * ds).abs();
            sup = if v.is_finite() { sup.max(v) } else { f64::INFINITY };
        }
    }
    sup
}

/// `λ_min / λ_max` of the shape, or 0 when the scale vanishes.
fn conditioning(cov: &FactoredCovariance) -> f64 {
    if !cov.log_scale.is_finite() {
        return 0.0;
    }
    let eig = SymmetricEigen::new(cov.shape.clone()).eigenvalues;
    let max = eig.max();
    if max > 0.0 {
        eig.min() / max
    } else {
        0.0
    }
}

/// `ln ‖σ_m^{−1} ξ‖` per direction, from the Cholesky factor of the shape.
fn whitened_direction_logs(rep: &LevyRepresentation, shape: &DMatrix<f64>, n_dirs: usize) -> Option<Vec<f64>> {
    let l = shape.clone().cholesky()?.l();
    (0..n_dirs)
        .map(|i| {
            let xi = nalgebra::DVector::from_column_slice(rep.direction(i));
            l.solve_lower_triangular(&xi).map(|v| v.norm().ln())
        })
        .collect()
}

/// `∫_m^∞ ‖σ_m^{−1}H(r,u)‖² 1{‖σ_m^{−1}H(r,u)‖ > κ} dr` for one mark.
/// The whitened amplitude decreases in `r`, so the indicator cuts the
/// range at the root `r*` of `log ratio = ln κ`.
fn lindeberg_single(rep: &LevyRepresentation, mark: &Mark, m: f64, shift: f64, kappa: f64) -> f64 {
    let log_ratio = |r: f64| rep.log_jump_amplitude(r, mark) + shift;
    let target = kappa.ln();
    let start = if m > 0.0 { m } else { f64::MIN_POSITIVE };
    if !(log_ratio(start) > target) {
        return 0.0;
    }
    let mut lo = start;
    let mut hi = (2.0 * start).max(1.0);
    while log_ratio(hi) > target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    integrate_finite(
        |r: f64| (2.0 * log_ratio(r)).exp(),
        start,
        lo,
        Tolerance::new(1e-300, 1e-9),
    )
    .value
}

/// Runs the assumption checks for `(rep, kernel)`.
///
/// `m_grid` must be increasing and positive, `kappa_grid` positive.
pub fn check_assumptions(
    rep: &LevyRepresentation,
    kernel: &Kernel,
    m_grid: &[f64],
    kappa_grid: &[f64],
    options: &AssumptionOptions,
) -> Result<DiagnosticsReport, DiagError> {
    if m_grid.is_empty() || m_grid.windows(2).any(|w| !(w[1] > w[0])) || !(m_grid[0] > 0.0) {
        return Err(DiagError::Parameter(
            "m grid must be nonempty, positive and strictly increasing".into(),
        ));
    }
    if kappa_grid.is_empty() || kappa_grid.iter().any(|k| !(*k > 0.0)) {
        return Err(DiagError::Parameter("kappa grid must be nonempty and positive".into()));
    }
    let reg = kernel.regularity_report();
    let horizon = kernel.horizon();

    let mut a2 = Verdict::analytic(reg.bounded, kernel_sup_scan(kernel));
    a2.method = reg.method;
    let l2 = kernel
        .square_integral(horizon, &kernel.natural_domain())
        .unwrap_or(f64::NAN);
    let mut b2 = Verdict::analytic(reg.square_integrable, l2);
    b2.method = reg.method;

    let regularity_c1 = match reg.split {
        Some((s1, s2)) => vec![
            SubdomainC1 {
                domain: s1,
                c1: reg.c1[0],
            },
            SubdomainC1 {
                domain: s2,
                c1: reg.c1[1],
            },
        ],
        None => vec![SubdomainC1 {
            domain: kernel.natural_domain(),
            c1: reg.c1[0],
        }],
    };

    let covs: Vec<FactoredCovariance> = m_grid
        .iter()
        .map(|&m| rep.residual_covariance_factored(m))
        .collect::<Result<_, _>>()?;
    let sigma_trace: Vec<f64> = covs.iter().map(|c| c.matrix().trace()).collect();
    // Every representation here has a Lévy measure with finite second
    // moment near the origin, so the residual tail vanishes as m → ∞.
    let c2 = Verdict::analytic(true, *sigma_trace.last().unwrap());

    let numeric_cov = matches!(rep.kind(), RepKind::TemperedStable { .. });
    let cond: Vec<f64> = covs.iter().map(conditioning).collect();
    let worst = cond.iter().copied().fold(f64::INFINITY, f64::min);
    let a3 = Verdict {
        status: if worst > 1e-12 { Status::Pass } else { Status::Fail },
        value: worst,
        method: if numeric_cov { Method::Numeric } else { Method::Analytic },
        numeric_status: None,
    };

    // Tail integral by Monte Carlo over marks, common marks for every (m, κ).
    let mut rng = path_rng(component_seed(options.seed, Component::Diagnostics), 0);
    let marks: Vec<Mark> = (0..options.n_marks).map(|_| rep.sample_mark(&mut rng)).collect();
    let n_dirs = match rep.kind() {
        RepKind::Stable { atoms, .. } | RepKind::TemperedStable { atoms, .. } => atoms.len(),
        _ => 1,
    };
    let mut lindeberg = Vec::with_capacity(m_grid.len());
    let mut lindeberg_se = Vec::with_capacity(m_grid.len());
    let mut singular_at_last = false;
    for (i, (&m, cov)) in m_grid.iter().zip(&covs).enumerate() {
        let dir_logs = if cond[i] > 1e-12 {
            whitened_direction_logs(rep, &cov.shape, n_dirs)
        } else {
            None
        };
        let Some(dir_logs) = dir_logs else {
            if i + 1 == m_grid.len() {
                singular_at_last = true;
            }
            lindeberg.push(vec![f64::NAN; kappa_grid.len()]);
            lindeberg_se.push(vec![f64::NAN; kappa_grid.len()]);
            continue;
        };
        let mut row = Vec::with_capacity(kappa_grid.len());
        let mut row_se = Vec::with_capacity(kappa_grid.len());
        for &kappa in kappa_grid {
            let values: Vec<f64> = marks
                .iter()
                .map(|mark| {
                    let shift = dir_logs[mark.direction_index()] - 0.5 * cov.log_scale;
                    lindeberg_single(rep, mark, m, shift, kappa)
                })
                .collect();
            let (mean, se) = mean_se(&values);
            row.push(mean);
            row_se.push(se);
        }
        lindeberg.push(row);
        lindeberg_se.push(row_se);
    }
    let last = lindeberg.last().unwrap();
    let value = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let numeric = if singular_at_last {
        Status::Inconclusive
    } else if last.iter().any(|v| !(*v < options.threshold)) {
        Status::Fail
    } else {
        Status::Pass
    };
    let b3 = match rep.kind() {
        RepKind::Gamma { .. } => Verdict {
            numeric_status: Some(numeric),
            ..Verdict::analytic(false, value)
        },
        RepKind::Stable { .. } | RepKind::TemperedStable { .. } => Verdict {
            numeric_status: Some(numeric),
            ..Verdict::analytic(true, value)
        },
        RepKind::ExponentialCp => Verdict {
            status: numeric,
            value,
            method: Method::Numeric,
            numeric_status: None,
        },
    };

    Ok(DiagnosticsReport {
        schema: SCHEMA,
        rep_id: rep.id(),
        kernel_id: kernel.id(),
        assumption_2a: a2,
        assumption_2b: b2,
        assumption_2c: c2,
        assumption_3a: a3,
        assumption_3b: b3,
        regularity_c1,
        m_grid: m_grid.to_vec(),
        kappa_grid: kappa_grid.to_vec(),
        sigma_trace,
        lindeberg,
        lindeberg_se,
        cf_distance: None,
        normality_p: None,
        tail_alpha_hat: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_tail_integral_is_flat_in_m() {
        // Whitened gamma jumps are U e^{-(r-m)/a}/√a, independent of m.
        let rep = LevyRepresentation::gamma(1.0, 1.0).unwrap();
        let k = Kernel::indicator(1.0).unwrap();
        let r = check_assumptions(&rep, &k, &[1.0, 10.0, 100.0], &[0.5], &AssumptionOptions::default()).unwrap();
        let row: Vec<f64> = r.lindeberg.iter().map(|v| v[0]).collect();
        assert!(row[0] > 0.1);
        assert!((row[0] - row[2]).abs() < 1e-9 * row[0]);
        assert_eq!(r.assumption_3b.status, Status::Fail);
        assert_eq!(r.assumption_3b.numeric_status, Some(Status::Fail));
    }

    #[test]
    fn single_mark_integral_matches_closed_form() {
        // a = 1, β = 1, U = u: ∫_m^{r*} u² e^{-2(r-m)} dr with r* − m = ln(u/κ).
        let rep = LevyRepresentation::gamma(1.0, 1.0).unwrap();
        let (m, u, kappa) = (3.0, 2.0, 0.5);
        let shift = m; // −½ log σ_m² = m for a = β = 1
        let v = lindeberg_single(&rep, &Mark::Exponential(u), m, shift, kappa);
        let expected = u * u * (1.0 - (kappa / u).powi(2)) / 2.0;
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }

    #[test]
    fn report_is_deterministic() {
        let rep = LevyRepresentation::symmetric_stable_1d(1.5, 1.0).unwrap();
        let k = Kernel::indicator(1.0).unwrap();
        let opts = AssumptionOptions {
            n_marks: 500,
            ..Default::default()
        };
        let a = check_assumptions(&rep, &k, &[10.0, 100.0], &[0.1, 1.0], &opts).unwrap();
        let b = check_assumptions(&rep, &k, &[10.0, 100.0], &[0.1, 1.0], &opts).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.sigma_trace[1] <= a.sigma_trace[0]);
    }

    #[test]
    fn exp_cp_beyond_one_is_singular() {
        let rep = LevyRepresentation::exponential_cp();
        let k = Kernel::indicator(1.0).unwrap();
        let r = check_assumptions(&rep, &k, &[0.5, 2.0], &[0.5], &AssumptionOptions::default()).unwrap();
        assert_eq!(r.assumption_3a.status, Status::Fail);
        assert_eq!(r.assumption_3b.status, Status::Inconclusive);
    }
}
