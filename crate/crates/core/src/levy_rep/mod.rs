//! Shot noise decompositions `ν(B) = ∫₀^∞ P(H(r, U) ∈ B) dr` of the
//! supported Lévy measures, together with the truncation quantities the
//! simulator and diagnostics need: centers `c_k`, the tail covariance
//! `σ_m²`, and the Lévy exponent of the truncated measure `ν_m`.
//!
//! Every jump factors as `H(r, u) = amplitude(r, u) · direction(u)` with a
//! unit direction vector. Gamma and exponential compound Poisson
//! integrators are one-dimensional subordinators and are simulated without
//! centering; stable and tempered stable integrators follow the
//! `1_{(0,1]}(‖z‖)` compensation convention unless their spectral measure
//! is symmetric.

mod exponent;
mod numeric;
mod spec;

pub use numeric::{residual_covariance_numeric, NumericCovariance};
pub use spec::{AtomSpec, RepSpec};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::quad::{integrate, integrate_finite, Tolerance};
use crate::special::{exp_partial_mean, exp_truncated_moment, gamma_cdf_int};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RepError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("spectral measure needs at least one atom")]
    NoAtoms,
    #[error("atom {index}: {reason}")]
    InvalidAtom { index: usize, reason: String },
    #[error("jump index argument r must be positive, got {0}")]
    NonPositiveIndex(f64),
    #[error("{0}")]
    Unsupported(String),
}

/// One atom `w · δ_ξ` of a discrete spectral measure on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub xi: Vec<f64>,
    pub weight: f64,
    /// Exponential tempering rate; unused for plain stable measures.
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RepKind {
    /// Bondesson representation of `ν(dz) = a e^{-βz}/z dz`.
    Gamma {
        a: f64,
        beta: f64,
    },
    Stable {
        alpha: f64,
        atoms: Vec<Atom>,
    },
    /// Tempering `q(r, ξ) = e^{-θ(ξ) r}`.
    TemperedStable {
        alpha: f64,
        atoms: Vec<Atom>,
    },
    /// Finite measure `ν(dz) = e^{-z} dz` on `(0, ∞)` with `H(r) = -ln r`.
    ExponentialCp,
}

/// A draw of the mark `U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mark {
    /// Standard exponential mark of the gamma representation.
    Exponential(f64),
    /// Index into the atom list, drawn with probability `w_i / ‖λ‖`.
    Direction(usize),
    /// Tempered stable mark `(u₁, u₂, u₃)` with `u₃ = θ_i ξ_i`.
    Tempered { e: f64, v: f64, atom: usize },
    /// The exponential compound Poisson representation ignores its mark.
    Unit,
}

impl Mark {
    pub fn direction_index(&self) -> usize {
        match *self {
            Mark::Direction(i) | Mark::Tempered { atom: i, .. } => i,
            Mark::Exponential(_) | Mark::Unit => 0,
        }
    }
}

/// `σ_m² = exp(log_scale) · shape`, kept apart so that diagnostics can
/// whiten jumps even when `σ_m²` underflows.
#[derive(Clone, Debug)]
pub struct FactoredCovariance {
    pub log_scale: f64,
    pub shape: DMatrix<f64>,
}

impl FactoredCovariance {
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.shape * self.log_scale.exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevyRepresentation {
    kind: RepKind,
    dim: usize,
    total_weight: f64,
    symmetric: bool,
    lambda: DMatrix<f64>,
}

const UNIT: [f64; 1] = [1.0];

fn check_positive(name: &'static str, value: f64) -> Result<(), RepError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(RepError::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

fn check_alpha(alpha: f64) -> Result<(), RepError> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(RepError::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must lie in (0, 2)",
        })
    }
}

fn normalize_atoms(atoms: Vec<Atom>, tempered: bool) -> Result<(Vec<Atom>, usize), RepError> {
    if atoms.is_empty() {
        return Err(RepError::NoAtoms);
    }
    let dim = atoms[0].xi.len();
    let mut out = Vec::with_capacity(atoms.len());
    for (index, mut atom) in atoms.into_iter().enumerate() {
        if atom.xi.len() != dim || dim == 0 {
            return Err(RepError::InvalidAtom {
                index,
                reason: format!("direction has dimension {}, expected {dim}", atom.xi.len()),
            });
        }
        let norm = atom.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= 1e-9) {
            return Err(RepError::InvalidAtom {
                index,
                reason: format!("direction must lie on the unit sphere, has norm {norm}"),
            });
        }
        atom.xi.iter_mut().for_each(|x| *x /= norm);
        if !(atom.weight.is_finite() && atom.weight > 0.0) {
            return Err(RepError::InvalidAtom {
                index,
                reason: format!("weight must be positive, got {}", atom.weight),
            });
        }
        if tempered && !(atom.theta.is_finite() && atom.theta > 0.0) {
            return Err(RepError::InvalidAtom {
                index,
                reason: format!("tempering rate theta must be positive, got {}", atom.theta),
            });
        }
        if !tempered {
            atom.theta = 0.0;
        }
        out.push(atom);
    }
    Ok((out, dim))
}

fn atoms_symmetric(atoms: &[Atom]) -> bool {
    let mut used = vec![false; atoms.len()];
    for i in 0..atoms.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let partner = (0..atoms.len()).find(|&j| {
            !used[j]
                && atoms[j].weight == atoms[i].weight
                && atoms[j].theta == atoms[i].theta
                && atoms[j].xi.iter().zip(&atoms[i].xi).all(|(a, b)| (a + b).abs() < 1e-12)
        });
        match partner {
            Some(j) => used[j] = true,
            None => return false,
        }
    }
    true
}

impl LevyRepresentation {
    pub fn gamma(a: f64, beta: f64) -> Result<Self, RepError> {
        check_positive("a", a)?;
        check_positive("beta", beta)?;
        Ok(Self {
            kind: RepKind::Gamma { a, beta },
            dim: 1,
            total_weight: 1.0,
            symmetric: false,
            lambda: DMatrix::from_element(1, 1, 1.0),
        })
    }

    pub fn stable(alpha: f64, atoms: Vec<Atom>) -> Result<Self, RepError> {
        check_alpha(alpha)?;
        let (atoms, dim) = normalize_atoms(atoms, false)?;
        Ok(Self::from_atoms(RepKind::Stable { alpha, atoms }, dim))
    }

    pub fn tempered_stable(alpha: f64, atoms: Vec<Atom>) -> Result<Self, RepError> {
        check_alpha(alpha)?;
        let (atoms, dim) = normalize_atoms(atoms, true)?;
        Ok(Self::from_atoms(RepKind::TemperedStable { alpha, atoms }, dim))
    }

    pub fn exponential_cp() -> Self {
        Self {
            kind: RepKind::ExponentialCp,
            dim: 1,
            total_weight: 1.0,
            symmetric: false,
            lambda: DMatrix::from_element(1, 1, 1.0),
        }
    }

    /// Symmetric one-dimensional stable integrator with weight `w` on each of `±1`.
    pub fn symmetric_stable_1d(alpha: f64, w: f64) -> Result<Self, RepError> {
        Self::stable(
            alpha,
            vec![
                Atom {
                    xi: vec![1.0],
                    weight: w,
                    theta: 0.0,
                },
                Atom {
                    xi: vec![-1.0],
                    weight: w,
                    theta: 0.0,
                },
            ],
        )
    }

    fn from_atoms(kind: RepKind, dim: usize) -> Self {
        let atoms = match &kind {
            RepKind::Stable { atoms, .. } | RepKind::TemperedStable { atoms, .. } => atoms,
            _ => unreachable!(),
        };
        let total_weight = atoms.iter().map(|a| a.weight).sum();
        let mut lambda = DMatrix::zeros(dim, dim);
        for atom in atoms {
            for i in 0..dim {
                for j in 0..dim {
                    lambda[(i, j)] += atom.weight * atom.xi[i] * atom.xi[j];
                }
            }
        }
        let symmetric = atoms_symmetric(atoms);
        Self {
            kind,
            dim,
            total_weight,
            symmetric,
            lambda,
        }
    }

    pub fn kind(&self) -> &RepKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Total mass `‖λ‖` of the spectral measure (1 for the scalar laws).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// `Λ = Σ w_i ξ_i ξ_iᵀ`.
    pub fn lambda_matrix(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    /// `ν(R₀^d)` for finite representations.
    pub fn finite_total_mass(&self) -> Option<f64> {
        matches!(self.kind, RepKind::ExponentialCp).then_some(1.0)
    }

    /// Whether the simulated series subtracts the centers `c_k`.
    pub fn uses_centering(&self) -> bool {
        match self.kind {
            RepKind::Gamma { .. } | RepKind::ExponentialCp => false,
            RepKind::Stable { .. } | RepKind::TemperedStable { .. } => !self.symmetric,
        }
    }

    /// Analytic status of the Gaussian small-jump limit. The gamma tail
    /// violates the Lindeberg-type condition for every `m`.
    pub fn gaussian_limit_holds(&self) -> bool {
        !matches!(self.kind, RepKind::Gamma { .. } | RepKind::ExponentialCp)
    }

    pub fn id(&self) -> String {
        match &self.kind {
            RepKind::Gamma { a, beta } => format!("gamma(a={a},beta={beta})"),
            RepKind::Stable { alpha, atoms } => format!("stable(alpha={alpha},atoms={})", atoms.len()),
            RepKind::TemperedStable { alpha, atoms } => {
                format!("tempered_stable(alpha={alpha},atoms={})", atoms.len())
            }
            RepKind::ExponentialCp => "exp_cp".to_string(),
        }
    }

    fn atoms(&self) -> &[Atom] {
        match &self.kind {
            RepKind::Stable { atoms, .. } | RepKind::TemperedStable { atoms, .. } => atoms,
            _ => &[],
        }
    }

    /// Unit direction attached to a direction index.
    pub fn direction(&self, index: usize) -> &[f64] {
        match &self.kind {
            RepKind::Stable { atoms, .. } | RepKind::TemperedStable { atoms, .. } => &atoms[index].xi,
            _ => &UNIT,
        }
    }

    /// Stable part `(r/‖λ‖)^{-1/α}` of the amplitude.
    fn stable_amplitude(&self, alpha: f64, r: f64) -> f64 {
        (r / self.total_weight).powf(-1.0 / alpha)
    }

    /// `(‖H(r,u)‖, direction index)`; `r` must be positive.
    pub fn jump_parts(&self, r: f64, mark: &Mark) -> (f64, usize) {
        let amp = match (&self.kind, mark) {
            (RepKind::Gamma { a, beta }, Mark::Exponential(u)) => (-r / a).exp() * u / beta,
            (RepKind::Stable { alpha, .. }, Mark::Direction(_)) => self.stable_amplitude(*alpha, r),
            (RepKind::TemperedStable { alpha, atoms }, Mark::Tempered { e, v, atom }) => {
                let cap = e * v.powf(1.0 / alpha) / atoms[*atom].theta;
                self.stable_amplitude(*alpha, r).min(cap)
            }
            (RepKind::ExponentialCp, _) => {
                if r <= 1.0 {
                    -r.ln()
                } else {
                    0.0
                }
            }
            (kind, mark) => panic!("mark {mark:?} does not belong to representation {kind:?}"),
        };
        (amp, mark.direction_index())
    }

    /// `ln ‖H(r,u)‖`, computed without underflow.
    pub fn log_jump_amplitude(&self, r: f64, mark: &Mark) -> f64 {
        match (&self.kind, mark) {
            (RepKind::Gamma { a, beta }, Mark::Exponential(u)) => u.ln() - beta.ln() - r / a,
            (RepKind::Stable { alpha, .. }, _) => -(r / self.total_weight).ln() / alpha,
            (RepKind::TemperedStable { alpha, atoms }, Mark::Tempered { e, v, atom }) => {
                let stable = -(r / self.total_weight).ln() / alpha;
                let cap = e.ln() + v.ln() / alpha - atoms[*atom].theta.ln();
                stable.min(cap)
            }
            _ => self.jump_parts(r, mark).0.ln(),
        }
    }

    /// `H(r, u)` as a vector in `R^d`.
    pub fn jump_magnitude(&self, r: f64, mark: &Mark) -> Result<Vec<f64>, RepError> {
        if !(r > 0.0) {
            return Err(RepError::NonPositiveIndex(r));
        }
        let (amp, dir) = self.jump_parts(r, mark);
        Ok(self.direction(dir).iter().map(|x| amp * x).collect())
    }

    fn sample_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let atoms = self.atoms();
        let target = rng.random::<f64>() * self.total_weight;
        let mut acc = 0.0;
        for (i, atom) in atoms.iter().enumerate() {
            acc += atom.weight;
            if target < acc {
                return i;
            }
        }
        atoms.len() - 1
    }

    pub fn sample_mark<R: Rng + ?Sized>(&self, rng: &mut R) -> Mark {
        match &self.kind {
            RepKind::Gamma { .. } => Mark::Exponential(Exp1.sample(rng)),
            RepKind::Stable { .. } => Mark::Direction(self.sample_atom(rng)),
            RepKind::TemperedStable { .. } => {
                let e = Exp1.sample(rng);
                let v = rng.random::<f64>();
                let atom = self.sample_atom(rng);
                Mark::Tempered { e, v, atom }
            }
            RepKind::ExponentialCp => Mark::Unit,
        }
    }

    /// `Σ_i (w_i/‖λ‖) ξ_i`, the mean direction of the mark law.
    fn mean_direction(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for atom in self.atoms() {
            for (o, x) in out.iter_mut().zip(&atom.xi) {
                *o += atom.weight * x / self.total_weight;
            }
        }
        out
    }

    /// `∫_{r0}^{r1} E[H(r,U) 1_{(0,1]}(‖H(r,U)‖)] dr`. The centers are
    /// `c_k = center_integral(k-1, k)`.
    pub fn center_integral(&self, r0: f64, r1: f64) -> Vec<f64> {
        if !(r1 > r0) {
            return vec![0.0; self.dim];
        }
        let tol = Tolerance::new(1e-14, 1e-11);
        match &self.kind {
            RepKind::Gamma { a, beta } => {
                let (a, beta) = (*a, *beta);
                let est = integrate(
                    |r| (-r / a).exp() / beta * exp_partial_mean(beta * (r / a).exp()),
                    r0,
                    r1,
                    tol,
                );
                vec![est.value]
            }
            RepKind::Stable { alpha, .. } => {
                if self.symmetric {
                    return vec![0.0; self.dim];
                }
                // ‖H‖ ≤ 1 iff r ≥ ‖λ‖.
                let lo = r0.max(self.total_weight);
                let scalar = if r1 > lo {
                    let l = self.total_weight;
                    if (*alpha - 1.0).abs() < 1e-12 {
                        l * (r1 / lo).ln()
                    } else {
                        let p = 1.0 - 1.0 / alpha;
                        l.powf(1.0 / alpha) * (r1.powf(p) - lo.powf(p)) / p
                    }
                } else {
                    0.0
                };
                self.mean_direction().into_iter().map(|x| x * scalar).collect()
            }
            RepKind::TemperedStable { alpha, atoms } => {
                if self.symmetric {
                    return vec![0.0; self.dim];
                }
                let mut out = vec![0.0; self.dim];
                for atom in atoms {
                    let scalar = tempered::center_scalar(*alpha, atom.theta, self.total_weight, r0, r1);
                    for (o, x) in out.iter_mut().zip(&atom.xi) {
                        *o += atom.weight / self.total_weight * x * scalar;
                    }
                }
                out
            }
            RepKind::ExponentialCp => {
                // |H| = -ln r ≤ 1 iff r ∈ [e^{-1}, 1].
                let lo = r0.max((-1.0f64).exp());
                let hi = r1.min(1.0);
                let anti = |r: f64| r - r * r.ln();
                vec![if hi > lo { anti(hi) - anti(lo) } else { 0.0 }]
            }
        }
    }

    /// The center `c_k`, `k ≥ 1`.
    pub fn center(&self, k: usize) -> Vec<f64> {
        assert!(k >= 1, "centers are indexed from 1");
        self.center_integral((k - 1) as f64, k as f64)
    }

    /// `σ_m²` in factored form.
    pub fn residual_covariance_factored(&self, m: f64) -> Result<FactoredCovariance, RepError> {
        if !(m >= 0.0) {
            return Err(RepError::InvalidParameter {
                name: "m",
                value: m,
                reason: "must be nonnegative",
            });
        }
        let one = || DMatrix::from_element(1, 1, 1.0);
        match &self.kind {
            RepKind::Gamma { a, beta } => Ok(FactoredCovariance {
                log_scale: (a / (beta * beta)).ln() - 2.0 * m / a,
                shape: one(),
            }),
            RepKind::Stable { alpha, .. } => {
                if m == 0.0 {
                    return Err(RepError::Unsupported(
                        "stable measure has no finite second moment at m = 0".into(),
                    ));
                }
                let p = 2.0 / alpha - 1.0;
                Ok(FactoredCovariance {
                    log_scale: -p * m.ln() + p * self.total_weight.ln() - p.ln(),
                    shape: self.lambda.clone(),
                })
            }
            RepKind::TemperedStable { alpha, atoms } => {
                let mut cov: DMatrix<f64> = DMatrix::zeros(self.dim, self.dim);
                for atom in atoms {
                    let s = tempered::tail_second_moment(*alpha, atom.theta, self.total_weight, m) * atom.weight
                        / self.total_weight;
                    if !s.is_finite() {
                        return Err(RepError::Unsupported(format!(
                            "tempered tail second moment did not converge at m = {m}"
                        )));
                    }
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            cov[(i, j)] += s * atom.xi[i] * atom.xi[j];
                        }
                    }
                }
                let trace = cov.trace();
                Ok(FactoredCovariance {
                    log_scale: trace.ln(),
                    shape: cov / trace,
                })
            }
            RepKind::ExponentialCp => {
                let value = if m >= 1.0 {
                    0.0
                } else if m == 0.0 {
                    2.0
                } else {
                    let l = m.ln();
                    2.0 - m * (l * l - 2.0 * l + 2.0)
                };
                Ok(FactoredCovariance {
                    log_scale: value.ln(),
                    shape: one(),
                })
            }
        }
    }

    /// `σ_m² = ∫_m^∞ E[H(r,U)^{⊗2}] dr`.
    pub fn residual_covariance(&self, m: f64) -> Result<DMatrix<f64>, RepError> {
        self.residual_covariance_factored(m).map(|f| f.matrix())
    }
}

/// Tempered stable integrals with the exponential variable of the mark
/// integrated out in closed form. With `c = v^{1/α}/θ` the capped
/// amplitude is `min(A, cE)`.
pub(crate) mod tempered {
    use super::*;

    pub(crate) fn inner_tol() -> Tolerance {
        Tolerance::new(1e-15, 1e-11)
    }

    fn cap_scale(alpha: f64, theta: f64, v: f64) -> f64 {
        v.powf(1.0 / alpha) / theta
    }

    /// `E_V[ E_E[min(A,cE) 1(min ≤ 1)] ]`.
    pub(crate) fn truncated_mean_at(alpha: f64, theta: f64, amp: f64) -> f64 {
        integrate_finite(
            |v| {
                let c = cap_scale(alpha, theta, v);
                if c == 0.0 {
                    0.0
                } else if amp <= 1.0 {
                    c * gamma_cdf_int(1, amp / c)
                } else {
                    c * exp_partial_mean(1.0 / c)
                }
            },
            0.0,
            1.0,
            inner_tol(),
        )
        .value
    }

    /// `E_V[ E_E[min(A,cE)] ]`.
    pub(crate) fn mean_at(alpha: f64, theta: f64, amp: f64) -> f64 {
        integrate_finite(
            |v| {
                let c = cap_scale(alpha, theta, v);
                if c == 0.0 {
                    0.0
                } else {
                    c * gamma_cdf_int(1, amp / c)
                }
            },
            0.0,
            1.0,
            inner_tol(),
        )
        .value
    }

    /// `E_V[ E_E[min(A,cE)²] ]`.
    pub(crate) fn second_moment_at(alpha: f64, theta: f64, amp: f64) -> f64 {
        integrate_finite(
            |v| {
                let c = cap_scale(alpha, theta, v);
                if c == 0.0 {
                    0.0
                } else {
                    c * c * exp_truncated_moment(2, amp / c)
                }
            },
            0.0,
            1.0,
            inner_tol(),
        )
        .value
    }

    /// Scalar factor of the center integral for one atom.
    pub(crate) fn center_scalar(alpha: f64, theta: f64, total_weight: f64, r0: f64, r1: f64) -> f64 {
        let amp = |r: f64| (r / total_weight).powf(-1.0 / alpha);
        // Below r = ‖λ‖ the stable part exceeds 1 and the integrand is constant.
        let split = total_weight.clamp(r0, r1);
        let flat = if split > r0 {
            (split - r0) * truncated_mean_at(alpha, theta, 2.0)
        } else {
            0.0
        };
        let tail = integrate(
            |r| truncated_mean_at(alpha, theta, amp(r)),
            split,
            r1,
            Tolerance::new(1e-14, 1e-10),
        );
        flat + tail.value
    }

    /// `∫_m^∞ E[min(A(r), cE)²] dr` for one atom, integrated in the
    /// amplitude variable `x = A(r)`, `dr = α‖λ‖ x^{-α-1} dx`.
    pub(crate) fn tail_second_moment(alpha: f64, theta: f64, total_weight: f64, m: f64) -> f64 {
        let x0 = if m == 0.0 {
            f64::INFINITY
        } else {
            (m / total_weight).powf(-1.0 / alpha)
        };
        let est = integrate(
            |x: f64| {
                if x == 0.0 {
                    0.0
                } else {
                    alpha * total_weight * x.powf(-alpha - 1.0) * second_moment_at(alpha, theta, x)
                }
            },
            0.0,
            x0,
            Tolerance::new(1e-300, 1e-10),
        );
        est.value
    }
}
