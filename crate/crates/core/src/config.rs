//! Scalar system parameters shared by every stage of the pipeline.
//!
//! Powers are carried in milliwatts. The dBm helpers below are the only place
//! where logarithmic units are converted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier frequency of the path-loss model in Hz.
pub const CARRIER_HZ: f64 = 1.9e9;

/// Converts dBm to mW.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Converts mW to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Stopping rule for the outer fractional-programming loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpStopRule {
    /// `|f1(i) - f1(i-1)|^2 <= eps_fp`.
    SquaredDelta,
    /// `|f1(i) - f1(i-1)| <= eps_fp`.
    AbsDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of access points (M).
    pub num_aps: usize,
    /// Antennas per AP (N_ap).
    pub ap_antennas: usize,
    /// Number of users (K).
    pub num_users: usize,
    /// Users in the reflection half-space (K_r).
    pub num_reflect_users: usize,
    /// Users in the transmission half-space (K_t).
    pub num_transmit_users: usize,
    /// Antennas per user (N_u).
    pub user_antennas: usize,
    /// Surface elements per row (L_h).
    pub ris_cols: usize,
    /// Surface elements per column (L_v).
    pub ris_rows: usize,
    /// Element width in meters.
    pub element_width: f64,
    /// Element height in meters.
    pub element_height: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// Coherence block length in symbols.
    pub coherence_len: usize,
    /// Pilot length in symbols.
    pub pilot_len: usize,
    /// Pilot power in mW.
    pub pilot_power: f64,
    /// Downlink power per AP in mW.
    pub downlink_power: f64,
    /// Noise power in mW.
    pub noise_power: f64,
    /// Per-antenna pilot power-control coefficient, identical for all users.
    pub pilot_coeff: f64,
    /// ADMM penalty parameter.
    pub penalty: f64,
    pub eps_fp: f64,
    pub eps_admm: f64,
    pub max_fp_iters: usize,
    pub max_admm_iters: usize,
    pub fp_stop: FpStopRule,
    /// Log-normal shadowing on links longer than the second breakpoint.
    pub shadowing: bool,
    /// Gain in dB added to every single-hop large-scale coefficient.
    pub link_gain_db: f64,
}

/// Per-hop gain at which median noise power equals median multi-user
/// interference under no power control at the default configuration.
pub const DEFAULT_LINK_GAIN_DB: f64 = 77.0;

impl Default for SystemConfig {
    fn default() -> Self {
        let wavelength = SPEED_OF_LIGHT / CARRIER_HZ;
        let mut cfg = Self {
            num_aps: 20,
            ap_antennas: 4,
            num_users: 10,
            num_reflect_users: 5,
            num_transmit_users: 5,
            user_antennas: 4,
            ris_cols: 4,
            ris_rows: 4,
            element_width: wavelength / 4.0,
            element_height: wavelength / 4.0,
            wavelength,
            coherence_len: 200,
            pilot_len: 20,
            pilot_power: dbm_to_mw(20.0),
            downlink_power: dbm_to_mw(23.0),
            noise_power: dbm_to_mw(-96.0),
            pilot_coeff: 0.25,
            penalty: 0.1,
            eps_fp: 0.01,
            eps_admm: 0.01,
            max_fp_iters: 100,
            max_admm_iters: 500,
            fp_stop: FpStopRule::SquaredDelta,
            shadowing: false,
            link_gain_db: DEFAULT_LINK_GAIN_DB,
        };
        cfg.set_users(10, 4);
        cfg
    }
}

impl SystemConfig {
    /// Number of surface elements (L).
    pub fn num_elements(&self) -> usize {
        self.ris_cols * self.ris_rows
    }

    /// Element area `d_H * d_V` in square meters.
    pub fn element_area(&self) -> f64 {
        self.element_width * self.element_height
    }

    /// `tau_p * p_p * xi`, the pilot energy per antenna.
    pub fn pilot_energy(&self) -> f64 {
        self.pilot_len as f64 * self.pilot_power * self.pilot_coeff
    }

    /// Per-AP budget on `sum_k zeta_mk^2`.
    pub fn zeta_budget(&self) -> f64 {
        self.downlink_power / (self.ap_antennas * self.user_antennas) as f64
    }

    /// Fraction of the coherence block carrying data.
    pub fn prelog(&self) -> f64 {
        (self.coherence_len as f64 - self.pilot_len as f64) / self.coherence_len as f64
    }

    /// Sets K and N_u with an even reflection/transmission split (extra user
    /// goes to reflection), `xi = 1/N_u` and `tau_p = K N_u / 2`. For odd K the
    /// pilot count is the smallest divisor of K not below `K / 2`.
    pub fn set_users(&mut self, num_users: usize, user_antennas: usize) -> &mut Self {
        self.num_users = num_users;
        self.user_antennas = user_antennas;
        self.num_transmit_users = num_users / 2;
        self.num_reflect_users = num_users - self.num_transmit_users;
        self.pilot_coeff = 1.0 / user_antennas as f64;
        self.pilot_len = half_pilot_len(num_users, user_antennas);
        self
    }

    /// Sets an `L_h x L_v` surface.
    pub fn set_surface(&mut self, cols: usize, rows: usize) -> &mut Self {
        self.ris_cols = cols;
        self.ris_rows = rows;
        self
    }

    /// Sets a square surface with `side * side` elements.
    pub fn set_square_surface(&mut self, side: usize) -> &mut Self {
        self.set_surface(side, side)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let counts = [
            ("num_aps", self.num_aps),
            ("ap_antennas", self.ap_antennas),
            ("num_users", self.num_users),
            ("user_antennas", self.user_antennas),
            ("ris_cols", self.ris_cols),
            ("ris_rows", self.ris_rows),
            ("coherence_len", self.coherence_len),
            ("pilot_len", self.pilot_len),
            ("max_fp_iters", self.max_fp_iters),
            ("max_admm_iters", self.max_admm_iters),
        ];
        for (name, v) in counts {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.num_reflect_users + self.num_transmit_users != self.num_users {
            return bad(format!(
                "K_r + K_t = {} + {} != K = {}",
                self.num_reflect_users, self.num_transmit_users, self.num_users
            ));
        }
        if self.pilot_len > self.coherence_len {
            return bad(format!(
                "tau_p = {} exceeds tau_c = {}",
                self.pilot_len, self.coherence_len
            ));
        }
        if self.pilot_len % self.user_antennas != 0 {
            return bad(format!(
                "tau_p = {} is not a multiple of N_u = {}",
                self.pilot_len, self.user_antennas
            ));
        }
        if self.user_antennas as f64 * self.pilot_coeff > 1.0 + 1e-12 {
            return bad(format!(
                "N_u * xi = {} exceeds 1",
                self.user_antennas as f64 * self.pilot_coeff
            ));
        }
        let positives = [
            ("element_width", self.element_width),
            ("element_height", self.element_height),
            ("wavelength", self.wavelength),
            ("pilot_power", self.pilot_power),
            ("downlink_power", self.downlink_power),
            ("noise_power", self.noise_power),
            ("pilot_coeff", self.pilot_coeff),
            ("penalty", self.penalty),
            ("eps_fp", self.eps_fp),
            ("eps_admm", self.eps_admm),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be strictly positive, got {v}"));
            }
        }
        if !self.link_gain_db.is_finite() {
            return bad("link_gain_db must be finite".into());
        }
        Ok(())
    }
}

fn half_pilot_len(num_users: usize, user_antennas: usize) -> usize {
    // number of pilot matrices must divide K
    let half = (num_users / 2).max(1);
    let groups = (half..=num_users).find(|g| num_users % g == 0).unwrap_or(num_users);
    groups * user_antennas
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.pilot_len, 20);
        assert_eq!(cfg.coherence_len, 200);
        assert!((cfg.prelog() - 0.9).abs() < 1e-15);
        assert!((cfg.pilot_coeff - 0.25).abs() < 1e-15);
        assert!((cfg.wavelength - 0.157_785_5).abs() < 1e-6);
        assert_eq!(cfg.num_elements(), 16);
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_mw(-96.0) - 2.511_886_431_509_58e-10).abs() < 1e-22);
        assert!((dbm_to_mw(20.0) - 100.0).abs() < 1e-12);
        assert!((mw_to_dbm(dbm_to_mw(23.0)) - 23.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_pilot_settings() {
        let mut cfg = SystemConfig::default();
        cfg.pilot_len = 18;
        assert!(cfg.validate().is_err());
        let mut cfg = SystemConfig::default();
        cfg.pilot_coeff = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = SystemConfig::default();
        cfg.pilot_len = 400;
        cfg.coherence_len = 200;
        assert!(cfg.validate().is_err());
        let mut cfg = SystemConfig::default();
        cfg.num_reflect_users = 4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn set_users_keeps_invariants() {
        for k in 1..=12 {
            for nu in 1..=6 {
                let mut cfg = SystemConfig::default();
                cfg.set_users(k, nu);
                cfg.validate().unwrap();
                assert_eq!((k * nu) % cfg.pilot_len, 0);
            }
        }
        let mut cfg = SystemConfig::default();
        cfg.set_users(4, 6);
        assert_eq!(cfg.pilot_len, 12);
    }
}
