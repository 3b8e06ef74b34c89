//! Executable assumption checks, characteristic function oracles,
//! normality tests for the scaled small-jump band and tail index
//! estimation for the out-of-window band.

mod assumptions;
mod cf;
pub mod stats;

pub use assumptions::{check_assumptions, AssumptionOptions, DiagnosticsReport, Status, SubdomainC1, Verdict};
pub use cf::{empirical_cf, theoretical_cf, CfEstimate};
pub use stats::{HillEstimate, TestResult};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::interval::Interval;
use crate::kernels::{Kernel, KernelError};
use crate::levy_rep::RepError;
use crate::simulator::{SamplePath, SimError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DiagError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("time {0} is not a grid point of the paths")]
    NotOnGrid(f64),
    #[error("{0} is singular")]
    Singular(String),
    #[error("{0}")]
    Parameter(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeNormality {
    pub t: f64,
    /// `∫_window f(t, s)² ds`, the limiting variance of each whitened component.
    pub variance: f64,
    pub sample_variance: f64,
    /// Smallest KS p-value over the components.
    pub ks_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalityResult {
    pub per_time: Vec<TimeNormality>,
    /// Mardia skewness on the joint law at the first two times.
    pub mardia_p: Option<f64>,
}

impl NormalityResult {
    pub fn min_p(&self) -> f64 {
        self.per_time.iter().map(|r| r.ks_p).fold(f64::INFINITY, f64::min)
    }
}

/// Whitens `q_paths` by `scale_cov^{−1/2}` (lower Cholesky inverse) and
/// tests each time in `t_list` against `N(0, ∫_window f(t,s)² ds)`.
///
/// For a band `(m, M]` the exact covariance of the band is
/// `σ_m² − σ_M²`, which is what callers should pass when `M` is finite.
pub fn normality_test(
    q_paths: &[SamplePath],
    scale_cov: &DMatrix<f64>,
    kernel: &Kernel,
    window: &Interval,
    t_list: &[f64],
) -> Result<NormalityResult, DiagError> {
    if q_paths.len() < 1000 {
        return Err(DiagError::TooFewSamples {
            needed: 1000,
            got: q_paths.len(),
        });
    }
    let chol = scale_cov
        .clone()
        .cholesky()
        .ok_or_else(|| DiagError::Singular("residual covariance".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| DiagError::Singular("residual covariance".into()))?;
    let d = scale_cov.nrows();
    let mut whitened_at = Vec::with_capacity(t_list.len());
    let mut per_time = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let j = q_paths[0].index_of(t).ok_or(DiagError::NotOnGrid(t))?;
        let variance = kernel.square_integral(t, window)?;
        let sd = variance.sqrt();
        let rows: Vec<Vec<f64>> = q_paths
            .iter()
            .map(|p| {
                let x = nalgebra::DVector::from_column_slice(&p.values[j]);
                (&l_inv * x).iter().copied().collect()
            })
            .collect();
        let mut ks_p = f64::INFINITY;
        let mut sample_variance = 0.0;
        for c in 0..d {
            let column: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            sample_variance += stats::variance_se(&column).0 / d as f64;
            let normal = statrs::distribution::Normal::new(0.0, sd)
                .map_err(|_| DiagError::Parameter(format!("limiting variance {variance} at t={t} is not positive")))?;
            let res = stats::ks_one_sample(&column, |x| statrs::distribution::ContinuousCDF::cdf(&normal, x));
            ks_p = ks_p.min(res.p_value);
        }
        per_time.push(TimeNormality {
            t,
            variance,
            sample_variance,
            ks_p,
        });
        whitened_at.push(rows);
    }
    let mardia_p = if whitened_at.len() >= 2 {
        let joint: Vec<Vec<f64>> = whitened_at[0]
            .iter()
            .zip(&whitened_at[1])
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Some(stats::mardia_skewness(&joint)?.p_value)
    } else {
        None
    };
    Ok(NormalityResult { per_time, mardia_p })
}

/// Hill estimate of the tail index of `sup_samples`.
pub fn tail_exponent(sup_samples: &[f64], top_fraction: f64) -> Result<HillEstimate, DiagError> {
    stats::hill(sup_samples, top_fraction)
}

/// Default fraction of order statistics used by [`tail_exponent`].
pub const DEFAULT_TOP_FRACTION: f64 = 0.05;
