use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::DiagError;
use crate::interval::Interval;
use crate::kernels::{Kernel, KernelFamily};
use crate::levy_rep::LevyRepresentation;
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::simulator::SamplePath;

/// Frequencies beyond this norm are refused.
const MAX_FREQUENCY: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CfEstimate {
    #[serde(skip)]
    pub value: Complex64,
    /// Error estimate of the exponent `∫ Ψ_m(f(t,s) y) ds`.
    pub error: f64,
    /// False when the outer quadrature missed its tolerance.
    pub converged: bool,
}

/// `E[e^{i⟨y, X_t⟩}]` of the principal truncation on `window`:
/// `exp(i⟨y, offset⟩ + ∫_window Ψ_m(f(t,s) y) ds)` with `Ψ_m` the
/// truncated Lévy exponent (centered where the simulator centers).
pub fn theoretical_cf(
    rep: &LevyRepresentation,
    kernel: &Kernel,
    m: f64,
    window: &Interval,
    t: f64,
    y: &[f64],
) -> Result<CfEstimate, DiagError> {
    if y.len() != rep.dim() {
        return Err(DiagError::Parameter(format!(
            "frequency has dimension {} but the representation has {}",
            y.len(),
            rep.dim()
        )));
    }
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm <= MAX_FREQUENCY) {
        return Err(DiagError::Parameter(format!(
            "frequency norm {norm} exceeds {MAX_FREQUENCY}"
        )));
    }
    if !kernel.regularity_report().bounded {
        return Err(DiagError::Parameter(format!("kernel {} is not bounded", kernel.id())));
    }
    let offset = kernel.offset(t);
    let phase = Complex64::new(0.0, offset * y.iter().sum::<f64>());
    if norm == 0.0 {
        return Ok(CfEstimate {
            value: Complex64::new(1.0, 0.0),
            error: 0.0,
            converged: true,
        });
    }
    let piece = kernel.support(t).intersect(window);
    if piece.is_empty() {
        return Ok(CfEstimate {
            value: phase.exp(),
            error: 0.0,
            converged: true,
        });
    }
    if !piece.is_finite() {
        return Err(DiagError::Parameter(format!("window {piece} must be finite")));
    }
    let (exponent, error, converged) = if let KernelFamily::Indicator = kernel.family() {
        (rep.truncated_exponent(m, y) * piece.len(), 0.0, true)
    } else {
        let scaled = |s: f64| -> Complex64 {
            let f = kernel.evaluate(t, s);
            if f == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let fy: Vec<f64> = y.iter().map(|v| f * v).collect();
            rep.truncated_exponent(m, &fy)
        };
        let est = integrate_with_breaks(
            scaled,
            piece.lo,
            piece.hi,
            &[0.0, t],
            Tolerance::new(1e-12, 1e-6).with_limit(2000),
        );
        (est.value, est.error, est.converged)
    };
    Ok(CfEstimate {
        value: (exponent + phase).exp(),
        error,
        converged,
    })
}

/// Sample mean of `e^{i⟨y, X_t⟩}` over `paths` for each `y` in `y_grid`.
pub fn empirical_cf(paths: &[SamplePath], t: f64, y_grid: &[Vec<f64>]) -> Result<Vec<Complex64>, DiagError> {
    if paths.len() < 1000 {
        return Err(DiagError::TooFewSamples {
            needed: 1000,
            got: paths.len(),
        });
    }
    let j = paths[0].index_of(t).ok_or(DiagError::NotOnGrid(t))?;
    if paths.iter().any(|p| p.index_of(t) != Some(j)) {
        return Err(DiagError::NotOnGrid(t));
    }
    let n = paths.len() as f64;
    Ok(y_grid
        .par_iter()
        .map(|y| {
            let mut re = 0.0;
            let mut im = 0.0;
            for p in paths {
                let arg: f64 = p.values[j].iter().zip(y).map(|(x, v)| x * v).sum();
                re += arg.cos();
                im += arg.sin();
            }
            Complex64::new(re / n, im / n)
        })
        .collect())
}
