//! Downlink power-control policies.
//!
//! All policies produce a [`PowerAllocation`] holding both `eta_mk` and the
//! transformed variable `zeta_mk = sqrt(eta_mk z_mk)`. The per-AP budget reads
//! `sum_k zeta_mk^2 <= p_d / (N_ap N_u)`.

mod admm;
mod fp;

pub use admm::{
    admm_fp_optimize, admm_inner, assemble_zeta_system, project_ball, project_nonneg_ball,
    AdmmOutcome, FpDiagnostics, FpOutcome, StopReason, ZetaSolver,
};
pub use fp::{
    build_fp_coefficients, evaluate_f2, evaluate_objective, update_gamma, update_varpi,
    FpCoefficients, RatioTerms,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::EstimationStatistics;
use crate::ris::ChannelStatistics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// Power-control coefficients, M x K.
    pub eta: DMatrix<f64>,
    /// `sqrt(eta_mk z_mk)`, M x K.
    pub zeta: DMatrix<f64>,
}

impl PowerAllocation {
    pub fn from_eta(eta: DMatrix<f64>, z: &DMatrix<f64>) -> Self {
        let zeta = eta.zip_map(z, |e, z| (e * z).sqrt());
        Self { eta, zeta }
    }

    /// `eta_mk = zeta_mk^2 / z_mk`.
    pub fn from_zeta(zeta: DMatrix<f64>, z: &DMatrix<f64>) -> Self {
        let eta = zeta.zip_map(z, |q, z| q * q / z);
        Self { eta, zeta }
    }

    /// Largest `sum_k zeta_mk^2 - p_d / (N_ap N_u)` over APs; non-positive
    /// when feasible.
    pub fn budget_excess(&self, config: &SystemConfig) -> f64 {
        let budget = config.zeta_budget();
        self.zeta
            .row_iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>() - budget)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_feasible(&self, config: &SystemConfig) -> bool {
        self.eta.iter().all(|&e| e >= 0.0)
            && self.budget_excess(config) <= crate::se::POWER_SLACK
    }
}

/// `eta_mk = p_d / (K tr(Dhat_mk))` with `tr(Dhat_mk) = z_mk N_ap N_u`.
pub fn no_power_control(est: &EstimationStatistics, config: &SystemConfig) -> PowerAllocation {
    let k_count = est.num_users() as f64;
    let scale = (config.ap_antennas * config.user_antennas) as f64;
    let eta = est.z.map(|z| config.downlink_power / (k_count * z * scale));
    PowerAllocation::from_eta(eta, &est.z)
}

/// Fractional power control with exponent `alpha`:
///
/// ```text
/// eta_mk = p_d / ( S_k^alpha * sum_k' tr(Dhat_mk') / S_k'^alpha ),  S_k = sum_m tr(D_mk)
/// ```
///
/// The `p_d` prefactor makes the per-AP budget bind with equality.
pub fn fractional_power_control(
    chan: &ChannelStatistics,
    est: &EstimationStatistics,
    config: &SystemConfig,
    alpha: f64,
) -> Result<PowerAllocation> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, 1]")));
    }
    let (m_count, k_count) = est.z.shape();
    let scale = (config.ap_antennas * config.user_antennas) as f64;
    let weight: Vec<f64> = (0..k_count)
        .map(|k| (chan.delta_bar.column(k).sum() * scale).powf(alpha))
        .collect();
    let mut eta = DMatrix::zeros(m_count, k_count);
    for m in 0..m_count {
        let denom: f64 = (0..k_count).map(|k| est.z[(m, k)] * scale / weight[k]).sum();
        for k in 0..k_count {
            eta[(m, k)] = config.downlink_power / (weight[k] * denom);
        }
    }
    Ok(PowerAllocation::from_eta(eta, &est.z))
}
