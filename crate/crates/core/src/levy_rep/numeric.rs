use nalgebra::DMatrix;
use rand::Rng;

use super::{LevyRepresentation, RepError};

/// Monte Carlo estimate of `∫_m^{r_max} E[H(r,U)^{⊗2}] dr`.
#[derive(Clone, Debug)]
pub struct NumericCovariance {
    pub mean: DMatrix<f64>,
    /// Entrywise standard error of `mean`.
    pub std_error: DMatrix<f64>,
    /// Crude size of the neglected range, `r_max · E‖H(r_max,U)‖²`.
    pub tail_estimate: f64,
    pub tail_warning: bool,
}

/// Stratified estimator: the `r` range is cut into `n_samples / 2` strata of
/// equal probability (log-spaced when the range spans more than two decades)
/// with two independent `(r, U)` draws per stratum.
pub fn residual_covariance_numeric<R: Rng + ?Sized>(
    rep: &LevyRepresentation,
    m: f64,
    n_samples: usize,
    r_max: f64,
    rng: &mut R,
) -> Result<NumericCovariance, RepError> {
    if n_samples < 1000 {
        return Err(RepError::InvalidParameter {
            name: "n_samples",
            value: n_samples as f64,
            reason: "at least 1000 samples are required",
        });
    }
    if !(m >= 0.0) || !(r_max >= m) || !r_max.is_finite() {
        return Err(RepError::InvalidParameter {
            name: "r_max",
            value: r_max,
            reason: "must be finite and no smaller than m",
        });
    }
    let d = rep.dim();
    if r_max == m {
        return Ok(NumericCovariance {
            mean: DMatrix::zeros(d, d),
            std_error: DMatrix::zeros(d, d),
            tail_estimate: 0.0,
            tail_warning: false,
        });
    }

    let log_scale = m > 0.0 && r_max / m > 100.0;
    let log_ratio = (r_max / m).ln();
    // r(v) and dr/dv for v ∈ [0,1].
    let map = |v: f64| -> (f64, f64) {
        if log_scale {
            let r = m * (v * log_ratio).exp();
            (r, r * log_ratio)
        } else {
            (m + v * (r_max - m), r_max - m)
        }
    };

    let strata = n_samples / 2;
    let width = 1.0 / strata as f64;
    let mut mean = DMatrix::zeros(d, d);
    let mut var = DMatrix::zeros(d, d);
    let draw = |rng: &mut R, h: usize| -> DMatrix<f64> {
        let v = (h as f64 + rng.random::<f64>()) * width;
        let (r, jac) = map(v);
        let r = r.max(f64::MIN_POSITIVE);
        let mark = rep.sample_mark(rng);
        let (amp, dir) = rep.jump_parts(r, &mark);
        let xi = rep.direction(dir);
        let s = amp * amp * jac;
        DMatrix::from_fn(d, d, |i, j| s * xi[i] * xi[j])
    };
    for h in 0..strata {
        let g1 = draw(rng, h);
        let g2 = draw(rng, h);
        mean += (&g1 + &g2) * (0.5 * width);
        let diff = &g1 - &g2;
        var += diff.component_mul(&diff) * (0.25 * width * width);
    }
    let std_error = var.map(f64::sqrt);

    let probes = 256;
    let tail: f64 = (0..probes)
        .map(|_| {
            let mark = rep.sample_mark(rng);
            rep.jump_parts(r_max, &mark).0.powi(2)
        })
        .sum::<f64>()
        * r_max
        / probes as f64;
    let tail_warning = tail > 3.0 * std_error.trace().max(f64::MIN_POSITIVE);
    if tail_warning {
        log::warn!(
            "residual covariance estimate: neglected tail beyond r_max = {r_max} is about {tail:.3e}, \
             larger than the Monte Carlo error"
        );
    }
    Ok(NumericCovariance {
        mean,
        std_error,
        tail_estimate: tail,
        tail_warning,
    })
}
