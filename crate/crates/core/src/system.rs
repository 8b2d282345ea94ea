use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::Result;
use crate::estimation::{estimation_stats, EstimationStatistics};
use crate::ris::{channel_covariance, ChannelStatistics, StarRisState};
use crate::scenario::{generate_scenario, Scenario};

/// Surface hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    /// Every element both reflects and transmits with an equal energy split.
    Star,
    /// Half the elements reflect only and half transmit only.
    Conventional,
}

/// Everything that is fixed for one drop: geometry, surface, statistics.
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub config: SystemConfig,
    pub scenario: Scenario,
    pub ris: StarRisState,
    pub chan: ChannelStatistics,
    pub est: EstimationStatistics,
}

impl SystemModel {
    pub fn build(config: SystemConfig, seed: u64, surface: Surface) -> Result<Self> {
        let scenario = generate_scenario(&config, seed)?;
        let ris = match surface {
            Surface::Star => StarRisState::star(&config, seed)?,
            Surface::Conventional => StarRisState::conventional_pair(&config, seed)?,
        };
        let chan = channel_covariance(&scenario, &ris);
        let est = estimation_stats(&chan, &config, &scenario.pilots);
        Ok(Self {
            config,
            scenario,
            ris,
            chan,
            est,
        })
    }
}
