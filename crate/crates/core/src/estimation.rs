//! Linear-MMSE channel estimation from orthogonal pilot matrices.
//!
//! With `c_k = sqrt(tau_p p_p xi_k)`:
//!
//! ```text
//! zbar_mk = c_k Dbar_mk / (sum_{j in P_k} c_j^2 Dbar_mj + sigma^2)
//! z_mk    = c_k Dbar_mk zbar_mk
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::ris::{random_matrix, ChannelRealization, ChannelStatistics};
use crate::scenario::PilotAssignment;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationStatistics {
    /// MMSE scaling coefficients, M x K.
    pub z_bar: DMatrix<f64>,
    /// Per-entry variance of the estimate, M x K.
    pub z: DMatrix<f64>,
    /// `sum_{j in P_k} c_j^2 Dbar_mj + sigma^2`, M x K.
    pub pilot_denominator: DMatrix<f64>,
    pub pilot_len: usize,
    pub pilot_power: f64,
    pub pilot_coeff: Vec<f64>,
    pub noise_power: f64,
    pub pilots: PilotAssignment,
}

impl EstimationStatistics {
    /// `tau_p p_p xi_k`.
    pub fn pilot_energy(&self, k: usize) -> f64 {
        self.pilot_len as f64 * self.pilot_power * self.pilot_coeff[k]
    }

    pub fn num_aps(&self) -> usize {
        self.z.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.z.ncols()
    }
}

pub fn estimation_stats(
    stats: &ChannelStatistics,
    config: &SystemConfig,
    pilots: &PilotAssignment,
) -> EstimationStatistics {
    let (m_count, k_count) = stats.delta_bar.shape();
    let pilot_coeff = vec![config.pilot_coeff; k_count];
    let energy = |k: usize| config.pilot_len as f64 * config.pilot_power * pilot_coeff[k];
    let delta = &stats.delta_bar;
    let denom = DMatrix::from_fn(m_count, k_count, |m, k| {
        pilots
            .members(k)
            .iter()
            .map(|&j| energy(j) * delta[(m, j)])
            .sum::<f64>()
            + config.noise_power
    });
    let z_bar = DMatrix::from_fn(m_count, k_count, |m, k| {
        energy(k).sqrt() * delta[(m, k)] / denom[(m, k)]
    });
    let z = DMatrix::from_fn(m_count, k_count, |m, k| {
        energy(k).sqrt() * delta[(m, k)] * z_bar[(m, k)]
    });
    EstimationStatistics {
        z_bar,
        z,
        pilot_denominator: denom,
        pilot_len: config.pilot_len,
        pilot_power: config.pilot_power,
        pilot_coeff,
        noise_power: config.noise_power,
        pilots: pilots.clone(),
    }
}

/// Simulates the despread pilot observation
/// `y_mk = sum_{j in P_k} c_j g_mj + n_mk` and returns `Ghat_mk = zbar_mk y_mk`.
///
/// Users sharing a pilot see the same observation, so one noise matrix is
/// drawn per (AP, pilot group). Pilot matrices are never formed: the
/// despread white noise is again white with variance `sigma^2`.
pub fn simulate_pilot_estimation<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    est: &EstimationStatistics,
    rng: &mut R,
) -> ChannelRealization {
    let m_count = channels.num_aps;
    let k_count = channels.num_users;
    let (rows, cols) = channels.get(0, 0).shape();
    let noise_std = est.noise_power.sqrt();
    let groups = &est.pilots.groups;
    let mut g_hat = vec![DMatrix::<Complex64>::zeros(rows, cols); m_count * k_count];
    for m in 0..m_count {
        for group in groups {
            let mut y = random_matrix(rows, cols, rng) * Complex64::new(noise_std, 0.0);
            for &j in group {
                y += channels.get(m, j) * Complex64::new(est.pilot_energy(j).sqrt(), 0.0);
            }
            for &k in group {
                g_hat[m * k_count + k] = &y * Complex64::new(est.z_bar[(m, k)], 0.0);
            }
        }
    }
    ChannelRealization {
        num_aps: m_count,
        num_users: k_count,
        g: g_hat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ris::{channel_covariance, sample_channel, StarRisState};
    use crate::rng::rng_from_seed;
    use crate::scenario::{generate_scenario, PilotAssignment};

    fn setup() -> (SystemConfig, crate::scenario::Scenario, StarRisState, ChannelStatistics) {
        let mut cfg = SystemConfig::default();
        cfg.num_aps = 3;
        cfg.set_users(4, 2);
        let sc = generate_scenario(&cfg, 21).unwrap();
        let ris = StarRisState::star(&cfg, 21).unwrap();
        let stats = channel_covariance(&sc, &ris);
        (cfg, sc, ris, stats)
    }

    #[test]
    fn singleton_group_closed_form() {
        let (cfg, _, _, stats) = setup();
        let pilots = PilotAssignment::orthogonal(4);
        let est = estimation_stats(&stats, &cfg, &pilots);
        let e = cfg.pilot_energy();
        for m in 0..3 {
            for k in 0..4 {
                let d = stats.delta_bar[(m, k)];
                let expect = e * d * d / (e * d + cfg.noise_power);
                assert!((est.z[(m, k)] - expect).abs() <= 1e-14 * expect);
            }
        }
    }

    #[test]
    fn noiseless_limit_recovers_channel_variance() {
        let (mut cfg, _, _, stats) = setup();
        cfg.noise_power = 1e-300;
        let est = estimation_stats(&stats, &cfg, &PilotAssignment::orthogonal(4));
        for (z, d) in est.z.iter().zip(stats.delta_bar.iter()) {
            assert!((z - d).abs() <= 1e-12 * d);
        }
    }

    #[test]
    fn contamination_reduces_estimate_quality() {
        let (cfg, _, _, stats) = setup();
        let alone = estimation_stats(&stats, &cfg, &PilotAssignment::orthogonal(4));
        let shared = PilotAssignment::from_groups(4, vec![vec![0, 1], vec![2], vec![3]]).unwrap();
        let contaminated = estimation_stats(&stats, &cfg, &shared);
        for m in 0..3 {
            assert!(contaminated.z[(m, 0)] < alone.z[(m, 0)]);
            assert!(contaminated.z[(m, 1)] < alone.z[(m, 1)]);
            assert_eq!(contaminated.z[(m, 2)], alone.z[(m, 2)]);
        }
    }

    #[test]
    fn variance_bounded_and_consistent() {
        let (cfg, sc, _, stats) = setup();
        let est = estimation_stats(&stats, &cfg, &sc.pilots);
        for m in 0..3 {
            for k in 0..4 {
                let z = est.z[(m, k)];
                assert!(z > 0.0 && z <= stats.delta_bar[(m, k)]);
                let rebuilt = est.pilot_energy(k).sqrt() * stats.delta_bar[(m, k)] * est.z_bar[(m, k)];
                assert_eq!(z, rebuilt);
            }
        }
    }

    #[test]
    fn equal_users_in_a_group_get_equal_quality() {
        let (cfg, mut sc, ris, _) = setup();
        let g = sc.pilots.groups[0].clone();
        let (a, b) = (g[0], g[1]);
        sc.beta_u[b] = sc.beta_u[a];
        sc.mode[b] = sc.mode[a];
        let stats = channel_covariance(&sc, &ris);
        let est = estimation_stats(&stats, &cfg, &sc.pilots);
        for m in 0..3 {
            assert_eq!(est.z[(m, a)], est.z[(m, b)]);
        }
    }

    #[test]
    fn noiseless_singleton_estimate_is_scaled_channel() {
        let (cfg, sc, ris, stats) = setup();
        let pilots = PilotAssignment::orthogonal(4);
        let mut est = estimation_stats(&stats, &cfg, &pilots);
        est.noise_power = 0.0;
        let mut rng = rng_from_seed(4);
        let ch = sample_channel(&sc, &ris, cfg.ap_antennas, cfg.user_antennas, &mut rng);
        let hat = simulate_pilot_estimation(&ch, &est, &mut rng);
        for m in 0..3 {
            for k in 0..4 {
                let ratio = est.z_bar[(m, k)] * est.pilot_energy(k).sqrt();
                let diff = hat.get(m, k) - ch.get(m, k) * Complex64::new(ratio, 0.0);
                assert!(diff.norm() <= 1e-12 * hat.get(m, k).norm());
            }
        }
    }

    #[test]
    fn shared_pilot_users_see_proportional_estimates() {
        let (cfg, sc, ris, stats) = setup();
        let est = estimation_stats(&stats, &cfg, &sc.pilots);
        let mut rng = rng_from_seed(5);
        let ch = sample_channel(&sc, &ris, cfg.ap_antennas, cfg.user_antennas, &mut rng);
        let hat = simulate_pilot_estimation(&ch, &est, &mut rng);
        let g = &sc.pilots.groups[0];
        let (a, b) = (g[0], g[1]);
        let ratio = est.z_bar[(0, a)] / est.z_bar[(0, b)];
        let diff = hat.get(0, a) - hat.get(0, b) * Complex64::new(ratio, 0.0);
        assert!(diff.norm() <= 1e-12 * hat.get(0, a).norm());
    }
}
