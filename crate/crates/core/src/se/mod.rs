//! Downlink spectral efficiency with conjugate beamforming and statistical
//! linear-MMSE detection at the users.
//!
//! The closed form is the product of record. [`monte_carlo_moments`] and
//! [`DetectorContext`] exist to validate its moment terms.

mod detector;
mod monte_carlo;

pub use detector::DetectorContext;
pub use monte_carlo::{monte_carlo_moments, MomentEstimate};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::EstimationStatistics;
use crate::power::PowerAllocation;
use crate::ris::ChannelStatistics;

/// Absolute slack on the per-AP power budget, in mW.
pub const POWER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeReport {
    /// Coherent gain per (user, stream), K x N_u.
    pub d_bar: DMatrix<f64>,
    /// Received second moment per (user, stream), K x N_u.
    pub c_bar: DMatrix<f64>,
    pub sinr: DMatrix<f64>,
    /// `sum_n log2(1 + SINR_kn)`, before the prelog.
    pub se_per_user: Vec<f64>,
    pub prelog: f64,
    pub sum_se: f64,
    pub avg_se: f64,
}

/// Checks `sum_k eta_mk z_mk N_ap N_u <= p_d` at every AP.
pub fn check_power_budget(eta: &DMatrix<f64>, est: &EstimationStatistics, config: &SystemConfig) -> Result<()> {
    let scale = (config.ap_antennas * config.user_antennas) as f64;
    for m in 0..eta.nrows() {
        let mut used = 0.0;
        for k in 0..eta.ncols() {
            let e = eta[(m, k)];
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::InvalidArgument(format!("eta[{m},{k}] = {e} is not a finite non-negative value")));
            }
            used += e * est.z[(m, k)] * scale;
        }
        if used > config.downlink_power + POWER_SLACK {
            return Err(Error::PowerBudget {
                ap: m,
                used,
                budget: config.downlink_power,
            });
        }
    }
    Ok(())
}

/// Per-user `(Dbar_k, Cbar_k)`; both are identical across streams.
pub(crate) fn gain_and_moment(
    est: &EstimationStatistics,
    chan: &ChannelStatistics,
    eta: &DMatrix<f64>,
    config: &SystemConfig,
) -> (DVector<f64>, DVector<f64>) {
    let (m_count, k_count) = chan.delta_bar.shape();
    let n_ap = config.ap_antennas as f64;
    let n_u = config.user_antennas as f64;
    let delta = &chan.delta_bar;
    let sqrt_eta = eta.map(f64::sqrt);
    let pilots = &est.pilots;

    let d_bar = DVector::from_fn(k_count, |k, _| {
        (0..m_count).map(|m| sqrt_eta[(m, k)] * est.z[(m, k)] * n_ap).sum()
    });

    let mut c_bar = DVector::zeros(k_count);
    for k in 0..k_count {
        let ck2 = est.pilot_energy(k);
        let mut total = 0.0;
        for kp in 0..k_count {
            // (ii) incoherent term over all users
            let mut t2 = 0.0;
            for m in 0..m_count {
                t2 += eta[(m, kp)] * est.z_bar[(m, kp)].powi(2) * delta[(m, k)] * est.pilot_denominator[(m, kp)];
            }
            total += t2 * n_u * n_ap;

            // (iv) double-AP sum with cross traces over the pilot group of k'
            let weighted: f64 = (0..m_count)
                .map(|m| sqrt_eta[(m, kp)] * est.z_bar[(m, kp)] * chan.beta_ap[m])
                .sum();
            let group: f64 = pilots
                .members(kp)
                .iter()
                .map(|&j| est.pilot_energy(j) * chan.beta_u[k] * chan.beta_u[j] * chan.cross_trace(k, j))
                .sum();
            total += n_u * n_ap * n_ap * group * weighted * weighted;

            if pilots.shares_pilot(k, kp) {
                // (i) coherent fluctuation, single-AP
                let mut t1 = 0.0;
                for m in 0..m_count {
                    t1 += eta[(m, kp)]
                        * est.z_bar[(m, kp)].powi(2)
                        * (chan.beta_ap[m] * chan.beta_u[k]).powi(2);
                }
                total += t1 * ck2 * chan.trace_sq(k) * n_ap;

                // (iii) coherent pilot contamination, double-AP
                let s: f64 = (0..m_count)
                    .map(|m| sqrt_eta[(m, kp)] * est.z_bar[(m, kp)] * delta[(m, k)])
                    .sum();
                total += ck2 * n_ap * n_ap * s * s;
            }
        }
        c_bar[k] = total;
    }
    (d_bar, c_bar)
}

pub fn closed_form_se(
    est: &EstimationStatistics,
    chan: &ChannelStatistics,
    eta: &PowerAllocation,
    config: &SystemConfig,
) -> Result<SeReport> {
    check_power_budget(&eta.eta, est, config)?;
    let (d, c) = gain_and_moment(est, chan, &eta.eta, config);
    let k_count = d.len();
    let n_u = config.user_antennas;
    let sigma2 = config.noise_power;
    let sinr_k: Vec<f64> = (0..k_count)
        .map(|k| d[k] * d[k] / (c[k] - d[k] * d[k] + sigma2))
        .collect();
    let d_bar = DMatrix::from_fn(k_count, n_u, |k, _| d[k]);
    let c_bar = DMatrix::from_fn(k_count, n_u, |k, _| c[k]);
    let sinr = DMatrix::from_fn(k_count, n_u, |k, _| sinr_k[k]);
    let se_per_user: Vec<f64> = (0..k_count)
        .map(|k| sinr.row(k).iter().map(|s| s.ln_1p() / std::f64::consts::LN_2).sum())
        .collect();
    let (sum_se, avg_se) = network_se(&se_per_user, config)?;
    Ok(SeReport {
        d_bar,
        c_bar,
        sinr,
        se_per_user,
        prelog: config.prelog(),
        sum_se,
        avg_se,
    })
}

/// MMSE-SIC rate `log2 det(I + D^H Sigma^{-1} D)` per user, evaluated from the
/// report's (diagonal) effective channel and interference covariance.
pub fn mmse_sic_se(report: &SeReport) -> Vec<f64> {
    let (k_count, n_u) = report.d_bar.shape();
    (0..k_count)
        .map(|k| {
            let d = report.d_bar[(k, 0)];
            let interference = report.c_bar[(k, 0)] - d * d + noise_from(report, k);
            // log det(I + X) = sum ln_1p(eig X); exact at low SINR where 1 + x rounds
            let x = DMatrix::<f64>::identity(n_u, n_u) * (d * d / interference);
            x.symmetric_eigenvalues()
                .iter()
                .map(|&l| l.max(0.0).ln_1p() / std::f64::consts::LN_2)
                .sum::<f64>()
        })
        .collect()
}

// sigma^2 recovered from the report: SINR = D^2 / (C - D^2 + sigma^2)
fn noise_from(report: &SeReport, k: usize) -> f64 {
    let d = report.d_bar[(k, 0)];
    let s = report.sinr[(k, 0)];
    if s > 0.0 {
        d * d / s - (report.c_bar[(k, 0)] - d * d)
    } else {
        f64::INFINITY
    }
}

/// `(sum_se, avg_se)` with the prelog `(tau_c - tau_p) / tau_c` applied.
pub fn network_se(se_per_user: &[f64], config: &SystemConfig) -> Result<(f64, f64)> {
    if config.pilot_len >= config.coherence_len {
        return Err(Error::InvalidConfig(format!(
            "tau_p = {} leaves no data symbols in tau_c = {}",
            config.pilot_len, config.coherence_len
        )));
    }
    let sum = config.prelog() * se_per_user.iter().sum::<f64>();
    Ok((sum, sum / se_per_user.len() as f64))
}
