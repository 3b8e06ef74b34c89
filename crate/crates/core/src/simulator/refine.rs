use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{GridSpec, PathMeta, SamplePath, SimError};
use crate::interval::Interval;
use crate::kernels::Kernel;
use crate::levy_rep::LevyRepresentation;

/// Discretized Gaussian field `G_t = Σ_j f(t, s_j) √Δ Z_j` over a uniform
/// partition of the window (midpoint nodes), scaled by a Cholesky factor
/// of the small-jump covariance.
#[derive(Clone, Debug)]
pub struct RefinementField {
    grid: Vec<f64>,
    /// `f(t_j, s_i) √Δ`, row per grid point.
    weights: Vec<Vec<f64>>,
    /// Lower Cholesky factor, `None` for a zero covariance.
    chol: Option<DMatrix<f64>>,
    dim: usize,
    window: Interval,
    kernel_id: String,
}

/// Lower Cholesky factor of `cov`; `Ok(None)` when `cov` vanishes.
pub fn covariance_factor(cov: &DMatrix<f64>) -> Result<Option<DMatrix<f64>>, SimError> {
    if cov.iter().all(|&x| x == 0.0) {
        return Ok(None);
    }
    if !cov.iter().all(|x| x.is_finite()) {
        return Err(SimError::NotPositiveDefinite(
            "covariance has non-finite entries".into(),
        ));
    }
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 1e-12 * max) {
        return Err(SimError::NotPositiveDefinite(format!(
            "smallest eigenvalue {min:.3e} against largest {max:.3e}"
        )));
    }
    cov.clone()
        .cholesky()
        .map(|c| Some(c.l()))
        .ok_or_else(|| SimError::NotPositiveDefinite("Cholesky factorization failed".into()))
}

/// Codes of warnings attached to a refinement request for `rep`.
pub fn refinement_warnings(rep: &LevyRepresentation) -> Vec<&'static str> {
    if rep.gaussian_limit_holds() {
        vec![]
    } else {
        log::warn!(
            "Gaussian small-jump limit does not hold for {}; the refinement is not a valid approximation",
            rep.id()
        );
        vec!["GAUSSIAN_INVALID"]
    }
}

impl RefinementField {
    pub fn new(
        kernel: &Kernel,
        sigma_sq: &DMatrix<f64>,
        window: Interval,
        grid: &GridSpec,
        resolution: usize,
    ) -> Result<Self, SimError> {
        if !window.is_finite() || window.is_empty() {
            return Err(SimError::Truncation(format!(
                "refinement window {window} must be finite"
            )));
        }
        if resolution == 0 {
            return Err(SimError::Grid("resolution must be positive".into()));
        }
        if sigma_sq.nrows() != sigma_sq.ncols() {
            return Err(SimError::NotPositiveDefinite("covariance is not square".into()));
        }
        let chol = covariance_factor(sigma_sq)?;
        let grid = grid.times()?;
        let delta = window.len() / resolution as f64;
        let root = delta.sqrt();
        let weights = grid
            .iter()
            .map(|&t| {
                (0..resolution)
                    .map(|i| kernel.evaluate(t, window.lo + (i as f64 + 0.5) * delta) * root)
                    .collect()
            })
            .collect();
        Ok(Self {
            grid,
            weights,
            chol,
            dim: sigma_sq.nrows(),
            window,
            kernel_id: kernel.id(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        let d = self.dim;
        let mut values = vec![vec![0.0; d]; self.grid.len()];
        if let Some(l) = &self.chol {
            let res = self.weights[0].len();
            let mut g = vec![vec![0.0; d]; self.grid.len()];
            for i in 0..res {
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                for (row, w) in g.iter_mut().zip(&self.weights) {
                    let wi = w[i];
                    if wi != 0.0 {
                        row.iter_mut().zip(&z).for_each(|(acc, zk)| *acc += wi * zk);
                    }
                }
            }
            for (out, gj) in values.iter_mut().zip(&g) {
                for (a, v) in out.iter_mut().enumerate() {
                    *v = (0..d).map(|b| l[(a, b)] * gj[b]).sum();
                }
            }
        }
        SamplePath {
            grid: self.grid.clone(),
            values,
            meta: PathMeta {
                seed: None,
                stream: None,
                m: f64::NAN,
                m_upper: None,
                window: vec![self.window],
                rep_id: "gaussian".into(),
                kernel_id: self.kernel_id.clone(),
                refined: true,
                jump_count: 0,
            },
        }
    }
}

/// `σ_m G` on the grid; `sigma_sq` is the covariance `σ_m²`.
pub fn gaussian_refinement<R: Rng + ?Sized>(
    kernel: &Kernel,
    sigma_sq: &DMatrix<f64>,
    window: Interval,
    grid: &GridSpec,
    resolution: usize,
    rng: &mut R,
) -> Result<SamplePath, SimError> {
    Ok(RefinementField::new(kernel, sigma_sq, window, grid, resolution)?.sample(rng))
}
