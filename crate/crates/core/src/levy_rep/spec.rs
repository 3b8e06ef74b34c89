use serde::{Deserialize, Serialize};

use super::{Atom, LevyRepresentation, RepError, RepKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub xi: Vec<f64>,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

/// JSON form of a representation, tagged by `"type"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RepSpec {
    Gamma { a: f64, beta: f64 },
    Stable { alpha: f64, atoms: Vec<AtomSpec> },
    TemperedStable { alpha: f64, atoms: Vec<AtomSpec> },
    ExpCp,
}

impl RepSpec {
    pub fn build(&self) -> Result<LevyRepresentation, RepError> {
        let atoms = |specs: &[AtomSpec], tempered: bool| -> Result<Vec<Atom>, RepError> {
            specs
                .iter()
                .enumerate()
                .map(|(index, s)| {
                    let theta = match (tempered, s.theta) {
                        (true, Some(theta)) => theta,
                        (true, None) => {
                            return Err(RepError::InvalidAtom {
                                index,
                                reason: "tempered stable atoms need a tempering rate theta".into(),
                            })
                        }
                        (false, _) => 0.0,
                    };
                    Ok(Atom {
                        xi: s.xi.clone(),
                        weight: s.w,
                        theta,
                    })
                })
                .collect()
        };
        match self {
            RepSpec::Gamma { a, beta } => LevyRepresentation::gamma(*a, *beta),
            RepSpec::Stable { alpha, atoms: a } => LevyRepresentation::stable(*alpha, atoms(a, false)?),
            RepSpec::TemperedStable { alpha, atoms: a } => LevyRepresentation::tempered_stable(*alpha, atoms(a, true)?),
            RepSpec::ExpCp => Ok(LevyRepresentation::exponential_cp()),
        }
    }
}

impl From<&LevyRepresentation> for RepSpec {
    fn from(rep: &LevyRepresentation) -> Self {
        let specs = |atoms: &[Atom], tempered: bool| {
            atoms
                .iter()
                .map(|a| AtomSpec {
                    xi: a.xi.clone(),
                    w: a.weight,
                    theta: tempered.then_some(a.theta),
                })
                .collect()
        };
        match rep.kind() {
            RepKind::Gamma { a, beta } => RepSpec::Gamma { a: *a, beta: *beta },
            RepKind::Stable { alpha, atoms } => RepSpec::Stable {
                alpha: *alpha,
                atoms: specs(atoms, false),
            },
            RepKind::TemperedStable { alpha, atoms } => RepSpec::TemperedStable {
                alpha: *alpha,
                atoms: specs(atoms, true),
            },
            RepKind::ExponentialCp => RepSpec::ExpCp,
        }
    }
}
