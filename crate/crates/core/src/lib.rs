//! Sample paths of infinitely divisible processes `X_t = ∫ f(t,s) dL_s`
//! driven by truncated shot noise series, with diagnostics for the
//! discarded small-jump and out-of-window residuals.

// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod interval;
pub mod kernels;
pub mod levy_rep;
pub mod quad;
pub mod simulator;
pub mod special;

pub use interval::Interval;
pub use kernels::{Kernel, KernelError, KernelSpec};
pub use levy_rep::{Atom, LevyRepresentation, Mark, RepError, RepKind, RepSpec};
pub use simulator::{GridSpec, SamplePath, SimError, TruncationParams};
