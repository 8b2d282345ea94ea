//! Simulation and power allocation for STAR-RIS-assisted cell-free massive
//! MIMO downlinks with multi-antenna users.
//!
//! The pipeline runs bottom-up:
//!
//! 1. [`scenario`]: geometry, large-scale fading and pilot groups from a seed.
//! 2. [`ris`]: surface correlation, coupling matrices and channel statistics.
//! 3. [`estimation`]: linear-MMSE estimation statistics.
//! 4. [`se`]: closed-form spectral efficiency and Monte Carlo moment checks.
//! 5. [`power`]: no power control, fractional power control and the
//!    ADMM-based fractional-programming optimizer.
//! 6. [`experiment`]: seeded sweeps, CSV output and the validation suite.

pub mod config;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod power;
pub mod ris;
pub mod rng;
pub mod scenario;
pub mod se;
mod system;

pub use config::{dbm_to_mw, mw_to_dbm, FpStopRule, SystemConfig};
pub use error::{Error, Result};
pub use estimation::{estimation_stats, simulate_pilot_estimation, EstimationStatistics};
pub use power::{
    admm_fp_optimize, fractional_power_control, no_power_control, FpCoefficients, FpDiagnostics,
    PowerAllocation,
};
pub use ris::{channel_covariance, sample_channel, ChannelStatistics, StarRisState};
pub use scenario::{generate_scenario, Mode, PilotAssignment, Scenario};
pub use se::{closed_form_se, mmse_sic_se, network_se, SeReport};
pub use system::{Surface, SystemModel};
