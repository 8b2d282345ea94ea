use serde::{Deserialize, Serialize};

use super::{Algorithm, Arm, ExperimentSpec, Sweep, SweepParameter};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::system::Surface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Figure {
    /// Sum SE against the number of APs, for two AP array sizes.
    SumSeVsAps,
    /// Average SE against antennas per user.
    AvgSeVsUserAntennas,
    /// Sum SE against surface size, with the conventional-surface arm.
    SumSeVsElements,
}

impl Figure {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            2 => Ok(Figure::SumSeVsAps),
            3 => Ok(Figure::AvgSeVsUserAntennas),
            4 => Ok(Figure::SumSeVsElements),
            _ => Err(Error::InvalidArgument(format!("no preset for figure {n}; expected 2, 3 or 4"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Figure::SumSeVsAps => 2,
            Figure::AvgSeVsUserAntennas => 3,
            Figure::SumSeVsElements => 4,
        }
    }
}

fn three_policies() -> Vec<Arm> {
    vec![
        Arm::star(Algorithm::AdmmFp),
        Arm::star(Algorithm::Fractional { alpha: 1.0 }),
        Arm::star(Algorithm::None),
    ]
}

fn counts(v: impl IntoIterator<Item = usize>) -> Vec<f64> {
    v.into_iter().map(|x| x as f64).collect()
}

/// Desk-scale preset. `full` adds `L = 196` to the surface sweep.
pub fn figure_spec(figure: Figure, root_seed: u64, trials: usize, full: bool) -> ExperimentSpec {
    let mut base = SystemConfig {
        shadowing: true,
        ..SystemConfig::default()
    };
    let (sweeps, arms) = match figure {
        Figure::SumSeVsAps => (
            vec![
                Sweep {
                    parameter: SweepParameter::NumAps,
                    values: counts([10, 20, 30, 40, 50]),
                },
                Sweep {
                    parameter: SweepParameter::ApAntennas,
                    values: counts([2, 4]),
                },
            ],
            three_policies(),
        ),
        Figure::AvgSeVsUserAntennas => {
            base.set_users(4, 1);
            (
                vec![Sweep {
                    parameter: SweepParameter::UserAntennas,
                    values: counts(1..=6),
                }],
                three_policies(),
            )
        }
        Figure::SumSeVsElements => {
            let mut l = vec![16, 36, 64, 100];
            if full {
                l.push(196);
            }
            (
                vec![Sweep {
                    parameter: SweepParameter::Elements,
                    values: counts(l),
                }],
                vec![
                    Arm::star(Algorithm::AdmmFp),
                    Arm {
                        algorithm: Algorithm::AdmmFp,
                        surface: Surface::Conventional,
                    },
                ],
            )
        }
    };
    ExperimentSpec {
        experiment_id: format!("fig{}", figure.number()),
        figure_id: figure.number().to_string(),
        root_seed,
        sweeps,
        base,
        arms,
        trials,
        mc_trials: 10_000,
        output_dir: None,
    }
}
