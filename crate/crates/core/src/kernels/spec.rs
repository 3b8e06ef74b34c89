use serde::{Deserialize, Serialize};

use super::{Kernel, KernelError, KernelFamily};

fn one() -> f64 {
    1.0
}

/// JSON form of a kernel, tagged by `"type"`. The horizon `T` is supplied
/// separately when building.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Indicator,
    Ou {
        lambda: f64,
        #[serde(default)]
        mu: f64,
        #[serde(default)]
        x0: f64,
    },
    ReverseOu {
        lambda: f64,
    },
    FracKha {
        #[serde(rename = "H")]
        h: f64,
        alpha: f64,
        #[serde(default = "one")]
        c: f64,
    },
    LinearFrac {
        n: u32,
        #[serde(rename = "H")]
        h: f64,
        alpha: f64,
    },
    Carma {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    LogFrac,
}

impl KernelSpec {
    pub fn build(&self, horizon: f64) -> Result<Kernel, KernelError> {
        match self {
            KernelSpec::Indicator => Kernel::indicator(horizon),
            KernelSpec::Ou { lambda, mu, x0 } => Kernel::ou(*lambda, *mu, *x0, horizon),
            KernelSpec::ReverseOu { lambda } => Kernel::reverse_ou(*lambda, horizon),
            KernelSpec::FracKha { h, alpha, c } => Kernel::frac_kha(*h, *alpha, *c, horizon),
            KernelSpec::LinearFrac { n, h, alpha } => Kernel::linear_frac(*n, *h, *alpha, horizon),
            KernelSpec::Carma { a, b } => Kernel::carma(a.clone(), b.clone(), horizon),
            KernelSpec::LogFrac => Kernel::log_frac(horizon),
        }
    }

    /// Spec of a built kernel; `None` for custom kernels.
    pub fn of(kernel: &Kernel) -> Option<Self> {
        Some(match kernel.family() {
            KernelFamily::Indicator => KernelSpec::Indicator,
            KernelFamily::Ou { lambda, mu, x0 } => KernelSpec::Ou {
                lambda: *lambda,
                mu: *mu,
                x0: *x0,
            },
            KernelFamily::ReverseOu { lambda } => KernelSpec::ReverseOu { lambda: *lambda },
            KernelFamily::FracKha(k) => KernelSpec::FracKha {
                h: k.h,
                alpha: k.alpha,
                c: k.c,
            },
            KernelFamily::LinearFrac(k) => KernelSpec::LinearFrac {
                n: k.n,
                h: k.h,
                alpha: k.alpha,
            },
            KernelFamily::Carma(k) => KernelSpec::Carma {
                a: k.a.clone(),
                b: k.b.clone(),
            },
            KernelFamily::LogFrac => KernelSpec::LogFrac,
            KernelFamily::Custom(_) => return None,
        })
    }
}
