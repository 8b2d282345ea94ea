//! Three-slope large-scale fading model for cell-free networks.
//!
//! Gain in dB for a link of length `d` (km) with breakpoints `d0 < d1`:
//!
//! ```text
//! d > d1        : -L - 35 log10(d)
//! d0 < d <= d1  : -L - 15 log10(d1) - 20 log10(d)
//! d <= d0       : -L - 15 log10(d1) - 20 log10(d0)
//! ```
//!
//! `L` is the Hata-COST231 constant. Log-normal shadowing applies only beyond
//! `d1`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hata-COST231 path-loss constant in dB for carrier `freq_mhz`, AP height
/// `h_ap` and terminal height `h_u` (meters).
pub fn hata_cost231_constant(freq_mhz: f64, h_ap: f64, h_u: f64) -> f64 {
    let lf = freq_mhz.log10();
    let terminal_correction = (1.1 * lf - 0.7) * h_u - (1.56 * lf - 0.8);
    46.3 + 33.9 * lf - 13.82 * h_ap.log10() - terminal_correction
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeSlope {
    pub constant_db: f64,
    pub d0_km: f64,
    pub d1_km: f64,
    pub shadow_std_db: f64,
}

impl Default for ThreeSlope {
    fn default() -> Self {
        Self {
            constant_db: hata_cost231_constant(1900.0, 15.0, 1.65),
            d0_km: 0.01,
            d1_km: 0.05,
            shadow_std_db: 8.0,
        }
    }
}

impl ThreeSlope {
    /// Deterministic gain in dB (negative) at `distance_km`.
    pub fn gain_db(&self, distance_km: f64) -> Result<f64> {
        if !(distance_km > 0.0) || !distance_km.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "distance must be positive, got {distance_km}"
            )));
        }
        let d = distance_km;
        let g = if d > self.d1_km {
            -self.constant_db - 35.0 * d.log10()
        } else if d > self.d0_km {
            -self.constant_db - 15.0 * self.d1_km.log10() - 20.0 * d.log10()
        } else {
            -self.constant_db - 15.0 * self.d1_km.log10() - 20.0 * self.d0_km.log10()
        };
        Ok(g)
    }

    /// Gain in dB including one shadowing draw when `d > d1`.
    pub fn shadowed_gain_db<R: Rng + ?Sized>(&self, distance_km: f64, rng: &mut R) -> Result<f64> {
        let g = self.gain_db(distance_km)?;
        if distance_km > self.d1_km {
            let z: f64 = rng.sample(StandardNormal);
            Ok(g + self.shadow_std_db * z)
        } else {
            Ok(g)
        }
    }
}

/// Linear-scale three-slope gain without shadowing.
pub fn path_loss(distance_km: f64) -> Result<f64> {
    ThreeSlope::default()
        .gain_db(distance_km)
        .map(|db| 10f64.powf(db / 10.0))
}
