//! Truncated shot noise path generation.
//!
//! For a time set `S` of Lebesgue measure `ℓ` and a jump index band
//! `(m₀, m₁]`, the generator draws the arrivals `Γ_k` of a unit rate
//! Poisson process on `(ℓm₀, ℓm₁]`, then jump times `T_k` uniform on `S`,
//! then marks `U_k`, and evaluates
//!
//! `Σ_k f(t, T_k) H(Γ_k/ℓ, U_k) − (B(m₁) − B(m₀)) ∫_S f(t, s) ds`
//!
//! on the grid, where `B(r) = ∫₀^r E[H 1_{(0,1]}(‖H‖)] dr` is the
//! telescoped sum of the centers. The principal part `X(m,n)` uses
//! `(0, m]` on `T_n`, the `Q` proxy uses `(m, M]` on `T_n`, and the `R`
//! band uses `(0, m]` on `T \ T_n`.

mod refine;
mod streams;

pub use refine::{covariance_factor, gaussian_refinement, refinement_warnings, RefinementField};
pub use streams::{component_seed, path_rng, Component};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::kernels::{Kernel, KernelError};
use crate::levy_rep::{LevyRepresentation, Mark};
use crate::special::KahanSum;

/// Largest admissible expected number of jumps per path.
pub const MAX_EXPECTED_JUMPS: f64 = 1e8;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("kernel {0} is not bounded; refusing to simulate")]
    KernelUnbounded(String),
    #[error("kernel {0} is not square integrable; refusing to simulate")]
    KernelNotSquareIntegrable(String),
    #[error("residual covariance is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("invalid truncation: {0}")]
    Truncation(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Rep(#[from] crate::levy_rep::RepError),
}

impl SimError {
    /// Machine readable code written to error artifacts.
    pub fn code(&self) -> &'static str {
        match self {
            SimError::KernelUnbounded(_) | SimError::KernelNotSquareIntegrable(_) => "KERNEL_UNBOUNDED",
            SimError::NotPositiveDefinite(_) => "ASSUMPTION_3A",
            SimError::Truncation(_) => "TRUNCATION_INVALID",
            SimError::Grid(_) => "GRID_INVALID",
            SimError::Kernel(_) => "KERNEL_ERROR",
            SimError::Rep(_) => "REPRESENTATION_ERROR",
        }
    }
}

/// Jump size level `m` and time window `T_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub m: f64,
    pub window: Interval,
}

impl TruncationParams {
    pub fn new(m: f64, window: Interval) -> Result<Self, SimError> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(SimError::Truncation(format!("m must be a nonnegative real, got {m}")));
        }
        if !window.is_finite() || window.is_empty() {
            return Err(SimError::Truncation(format!(
                "window {window} must be a finite interval of positive length"
            )));
        }
        Ok(Self { m, window })
    }

    /// `Leb(T_n)`.
    pub fn len(&self) -> f64 {
        self.window.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    /// `J + 1` equally spaced points `0 = t₀ < … < t_J = T`.
    Uniform {
        #[serde(rename = "J")]
        j: usize,
        #[serde(rename = "T")]
        horizon: f64,
    },
    Times {
        times: Vec<f64>,
    },
}

impl GridSpec {
    pub fn uniform(j: usize, horizon: f64) -> Self {
        GridSpec::Uniform { j, horizon }
    }

    pub fn times(&self) -> Result<Vec<f64>, SimError> {
        match self {
            GridSpec::Uniform { j, horizon } => {
                if *j == 0 || !(horizon.is_finite() && *horizon > 0.0) {
                    return Err(SimError::Grid(format!("need J ≥ 1 and T > 0, got J={j}, T={horizon}")));
                }
                Ok((0..=*j).map(|i| horizon * i as f64 / *j as f64).collect())
            }
            GridSpec::Times { times } => {
                if times.is_empty() {
                    return Err(SimError::Grid("explicit time list is empty".into()));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
                    return Err(SimError::Grid(
                        "explicit times must be finite and strictly increasing".into(),
                    ));
                }
                Ok(times.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathMeta {
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub m: f64,
    /// Upper end of the index band for `Q` proxies.
    pub m_upper: Option<f64>,
    pub window: Vec<Interval>,
    pub rep_id: String,
    pub kernel_id: String,
    pub refined: bool,
    pub jump_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    pub grid: Vec<f64>,
    /// `values[j][i]`: component `i` at `grid[j]`.
    pub values: Vec<Vec<f64>>,
    pub meta: PathMeta,
}

impl SamplePath {
    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Index of `t` in the grid (exact match).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.grid.iter().position(|&g| g == t)
    }

    /// `max_j |X_{t_j}|` over the grid, Euclidean norm in `R^d`.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

fn check_kernel(kernel: &Kernel) -> Result<(), SimError> {
    let reg = kernel.regularity_report();
    if !reg.bounded {
        return Err(SimError::KernelUnbounded(kernel.id()));
    }
    if !reg.square_integrable {
        return Err(SimError::KernelNotSquareIntegrable(kernel.id()));
    }
    Ok(())
}

/// Shared precomputation for one `(rep, kernel, index band, time set, grid)`.
#[derive(Clone, Debug)]
pub struct PathGenerator<'a> {
    rep: &'a LevyRepresentation,
    kernel: &'a Kernel,
    pieces: Vec<Interval>,
    ell: f64,
    lo: f64,
    hi: f64,
    grid: Vec<f64>,
    /// `(B(hi) − B(lo)) ∫_S f(t_j, s) ds`, per grid point and component.
    drift: Vec<Vec<f64>>,
    offset: Vec<f64>,
    include_offset: bool,
    empty_if_no_jumps: bool,
}

impl<'a> PathGenerator<'a> {
    fn build(
        rep: &'a LevyRepresentation,
        kernel: &'a Kernel,
        pieces: Vec<Interval>,
        band: (f64, f64),
        grid: &GridSpec,
        include_offset: bool,
    ) -> Result<Self, SimError> {
        check_kernel(kernel)?;
        let grid = grid.times()?;
        let domain = kernel.natural_domain();
        if let Some(t) = grid.iter().find(|&&t| t < 0.0 || t > kernel.horizon() * (1.0 + 1e-12)) {
            return Err(SimError::Grid(format!(
                "time {t} lies outside [0, {}]",
                kernel.horizon()
            )));
        }
        let pieces: Vec<Interval> = pieces.into_iter().filter(|p| !p.is_empty()).collect();
        for p in &pieces {
            if !p.is_finite() {
                return Err(SimError::Truncation(format!("time set piece {p} has infinite length")));
            }
            if !domain.contains_interval(p) {
                return Err(SimError::Truncation(format!(
                    "time set piece {p} is not contained in the kernel domain {domain}"
                )));
            }
        }
        let ell: f64 = pieces.iter().map(Interval::len).sum();
        let (lo, hi) = band;
        if ell * (hi - lo) > MAX_EXPECTED_JUMPS {
            return Err(SimError::Truncation(format!(
                "expected jump count {} exceeds the guard {MAX_EXPECTED_JUMPS}",
                ell * (hi - lo)
            )));
        }
        let d = rep.dim();
        let drift = if rep.uses_centering() && ell > 0.0 && hi > lo {
            let b_lo = rep.center_integral(0.0, lo);
            let b_hi = rep.center_integral(0.0, hi);
            let b: Vec<f64> = b_hi.iter().zip(&b_lo).map(|(h, l)| h - l).collect();
            let mut out = Vec::with_capacity(grid.len());
            for &t in &grid {
                let mut integral = 0.0;
                for p in &pieces {
                    integral += kernel.time_integral(t, p)?;
                }
                out.push(b.iter().map(|x| x * integral).collect());
            }
            out
        } else {
            vec![vec![0.0; d]; grid.len()]
        };
        let offset = grid.iter().map(|&t| kernel.offset(t)).collect();
        Ok(Self {
            rep,
            kernel,
            pieces,
            ell,
            lo,
            hi,
            grid,
            drift,
            offset,
            include_offset,
            empty_if_no_jumps: false,
        })
    }

    /// Principal truncation `X(m, n)`.
    pub fn principal(
        rep: &'a LevyRepresentation,
        kernel: &'a Kernel,
        trunc: &TruncationParams,
        grid: &GridSpec,
    ) -> Result<Self, SimError> {
        if !(trunc.m * trunc.len() > 0.0) {
            return Err(SimError::Truncation("ℓ·m must be positive".into()));
        }
        let mut g = Self::build(rep, kernel, vec![trunc.window], (0.0, trunc.m), grid, true)?;
        g.empty_if_no_jumps = true;
        Ok(g)
    }

    /// Finite band proxy for `Q(m)`: jump indices in `(m, M]` on the window.
    pub fn q_band(
        rep: &'a LevyRepresentation,
        kernel: &'a Kernel,
        m: f64,
        upper: f64,
        window: Interval,
        grid: &GridSpec,
    ) -> Result<Self, SimError> {
        if !(upper >= m && m >= 0.0) {
            return Err(SimError::Truncation(format!("need 0 ≤ m ≤ M, got m={m}, M={upper}")));
        }
        TruncationParams::new(m, window)?;
        Self::build(rep, kernel, vec![window], (m, upper), grid, false)
    }

    /// Out-of-window band `R(m, n)`: indices in `(0, m]`, times in `outer \ inner`.
    pub fn r_band(
        rep: &'a LevyRepresentation,
        kernel: &'a Kernel,
        m: f64,
        inner: Interval,
        outer: Interval,
        grid: &GridSpec,
    ) -> Result<Self, SimError> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(SimError::Truncation(format!("m must be a nonnegative real, got {m}")));
        }
        if !outer.contains_interval(&inner) {
            return Err(SimError::Truncation(format!(
                "inner window {inner} is not inside {outer}"
            )));
        }
        Self::build(rep, kernel, outer.difference(&inner), (0.0, m), grid, false)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Total measure `ℓ` of the time set.
    pub fn time_measure(&self) -> f64 {
        self.ell
    }

    fn uniform_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut x = rng.random::<f64>() * self.ell;
        for p in &self.pieces {
            if x < p.len() {
                return p.lo + x;
            }
            x -= p.len();
        }
        let last = self.pieces.last().unwrap();
        last.lo + rng.random::<f64>() * last.len()
    }

    /// One path from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        let d = self.rep.dim();
        let n_grid = self.grid.len();
        let mut values = vec![vec![0.0; d]; n_grid];
        let mut jump_count = 0;
        if self.ell > 0.0 && self.hi > self.lo {
            let start = self.ell * self.lo;
            let stop = self.ell * self.hi;
            let mut gammas = Vec::new();
            let mut g = start;
            loop {
                let e: f64 = Exp1.sample(rng);
                g += e;
                if g > stop {
                    break;
                }
                gammas.push(g);
            }
            jump_count = gammas.len();
            let times: Vec<f64> = gammas.iter().map(|_| self.uniform_time(rng)).collect();
            let marks: Vec<Mark> = gammas.iter().map(|_| self.rep.sample_mark(rng)).collect();

            if jump_count > 0 || !self.empty_if_no_jumps {
                let mut acc = vec![KahanSum::default(); n_grid * d];
                for ((gamma, &tk), mark) in gammas.iter().zip(&times).zip(&marks) {
                    let (amp, dir) = self.rep.jump_parts(gamma / self.ell, mark);
                    if amp == 0.0 {
                        continue;
                    }
                    let xi = self.rep.direction(dir);
                    for (j, &t) in self.grid.iter().enumerate() {
                        let f = self.kernel.evaluate(t, tk);
                        if f == 0.0 {
                            continue;
                        }
                        for (i, x) in xi.iter().enumerate() {
                            acc[j * d + i].add(f * amp * x);
                        }
                    }
                }
                for (j, row) in values.iter_mut().enumerate() {
                    for (i, v) in row.iter_mut().enumerate() {
                        let mut sum = acc[j * d + i];
                        sum.add(-self.drift[j][i]);
                        *v = sum.total();
                    }
                }
            }
        }
        if self.include_offset {
            for (row, off) in values.iter_mut().zip(&self.offset) {
                row.iter_mut().for_each(|v| *v += off);
            }
        }
        SamplePath {
            grid: self.grid.clone(),
            values,
            meta: PathMeta {
                seed: None,
                stream: None,
                m: if self.lo > 0.0 { self.lo } else { self.hi },
                m_upper: (self.lo > 0.0).then_some(self.hi),
                window: self.pieces.clone(),
                rep_id: self.rep.id(),
                kernel_id: self.kernel.id(),
                refined: false,
                jump_count,
            },
        }
    }

    /// `n_paths` paths on independent streams `0..n_paths` of the component
    /// seed, generated in parallel; the result is ordered by path index.
    pub fn sample_batch(&self, seed: u64, component: Component, n_paths: usize) -> Vec<SamplePath> {
        let cs = component_seed(seed, component);
        (0..n_paths as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = path_rng(cs, k);
                let mut path = self.sample(&mut rng);
                path.meta.seed = Some(seed);
                path.meta.stream = Some(k);
                path
            })
            .collect()
    }
}

/// `X(m, n)` on the grid.
pub fn generate_path<R: Rng + ?Sized>(
    rep: &LevyRepresentation,
    kernel: &Kernel,
    trunc: &TruncationParams,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<SamplePath, SimError> {
    Ok(PathGenerator::principal(rep, kernel, trunc, grid)?.sample(rng))
}

/// Parallel batch of `X(m, n)` paths from a master seed.
pub fn generate_batch(
    rep: &LevyRepresentation,
    kernel: &Kernel,
    trunc: &TruncationParams,
    grid: &GridSpec,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<SamplePath>, SimError> {
    Ok(PathGenerator::principal(rep, kernel, trunc, grid)?.sample_batch(seed, Component::Principal, n_paths))
}

/// Finite-`M` proxy of `Q(m)` on the grid.
pub fn sample_q_band<R: Rng + ?Sized>(
    rep: &LevyRepresentation,
    kernel: &Kernel,
    m: f64,
    upper: f64,
    window: Interval,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<SamplePath, SimError> {
    Ok(PathGenerator::q_band(rep, kernel, m, upper, window, grid)?.sample(rng))
}

/// `R(m, n)` for the time band `outer \ inner` on the grid.
pub fn sample_r_band<R: Rng + ?Sized>(
    rep: &LevyRepresentation,
    kernel: &Kernel,
    m: f64,
    inner: Interval,
    outer: Interval,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<SamplePath, SimError> {
    Ok(PathGenerator::r_band(rep, kernel, m, inner, outer, grid)?.sample(rng))
}

#[cfg(test)]
mod tests;
