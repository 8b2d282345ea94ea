//! Network geometry, large-scale fading and pilot assignment.
//!
//! All coordinates are in kilometers. The surface sits at `(0.5, 0.5)`; APs
//! are dropped in `[-0.5, 0.5)^2`, reflection-side users in
//! `[0, 0.8] x [0, 0.5)` and transmission-side users in `[0, 0.8] x (0.5, 0.8]`.

mod pathloss;

pub use pathloss::{hata_cost231_constant, path_loss, ThreeSlope};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};

pub const RIS_POSITION: [f64; 2] = [0.5, 0.5];

/// Side of the surface a user is served from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Reflection,
    Transmission,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::Reflection => 0,
            Mode::Transmission => 1,
        }
    }
}

/// Partition of users into groups sharing one pilot matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotAssignment {
    pub groups: Vec<Vec<usize>>,
    pub group_of: Vec<usize>,
}

impl PilotAssignment {
    /// Builds an assignment from explicit groups, checking that they partition
    /// `0..num_users`.
    pub fn from_groups(num_users: usize, mut groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut group_of = vec![usize::MAX; num_users];
        for (g, members) in groups.iter_mut().enumerate() {
            members.sort_unstable();
            for &k in members.iter() {
                if k >= num_users || group_of[k] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "pilot groups do not partition 0..{num_users} (user {k})"
                    )));
                }
                group_of[k] = g;
            }
        }
        if let Some(k) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidArgument(format!("user {k} has no pilot")));
        }
        Ok(Self { groups, group_of })
    }

    /// Every user on its own pilot.
    pub fn orthogonal(num_users: usize) -> Self {
        Self {
            groups: (0..num_users).map(|k| vec![k]).collect(),
            group_of: (0..num_users).collect(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.group_of.len()
    }

    /// The set P_k of users sharing user `k`'s pilot, `k` included.
    pub fn members(&self, k: usize) -> &[usize] {
        &self.groups[self.group_of[k]]
    }

    pub fn shares_pilot(&self, k: usize, j: usize) -> bool {
        self.group_of[k] == self.group_of[j]
    }
}

/// Splits `num_users` into `tau_p / N_u` equal pilot groups, round-robin over
/// a seed-shuffled user order.
pub fn assign_pilots(
    num_users: usize,
    user_antennas: usize,
    pilot_len: usize,
    seed: u64,
) -> Result<PilotAssignment> {
    if user_antennas == 0 || pilot_len == 0 || pilot_len % user_antennas != 0 {
        return Err(Error::InvalidArgument(format!(
            "tau_p = {pilot_len} is not a positive multiple of N_u = {user_antennas}"
        )));
    }
    let num_groups = pilot_len / user_antennas;
    if num_groups > num_users || num_users % num_groups != 0 {
        return Err(Error::InvalidArgument(format!(
            "{num_groups} pilot matrices cannot split {num_users} users evenly"
        )));
    }
    let mut order: Vec<usize> = (0..num_users).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut groups = vec![Vec::with_capacity(num_users / num_groups); num_groups];
    for (i, &k) in order.iter().enumerate() {
        groups[i % num_groups].push(k);
    }
    PilotAssignment::from_groups(num_users, groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    pub ris_position: [f64; 2],
    /// Surface-to-AP large-scale fading, one per AP.
    pub beta_ap: Vec<f64>,
    /// User-to-surface large-scale fading, one per user.
    pub beta_u: Vec<f64>,
    pub mode: Vec<Mode>,
    pub pilots: PilotAssignment,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn generate_scenario(config: &SystemConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let pilots = assign_pilots(
        config.num_users,
        config.user_antennas,
        config.pilot_len,
        derive_seed(seed, stream::PILOTS),
    )?;

    let mut rng = rng_from_seed(derive_seed(seed, stream::GEOMETRY));
    let ap_positions: Vec<[f64; 2]> = (0..config.num_aps)
        .map(|_| [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)])
        .collect();
    let mut user_positions = Vec::with_capacity(config.num_users);
    let mut mode = Vec::with_capacity(config.num_users);
    for k in 0..config.num_users {
        let x = rng.random_range(0.0..=0.8);
        if k < config.num_reflect_users {
            user_positions.push([x, rng.random_range(0.0..0.5)]);
            mode.push(Mode::Reflection);
        } else {
            // (0.5, 0.8]
            let u: f64 = rng.random_range(0.0..1.0);
            user_positions.push([x, 0.8 - 0.3 * u]);
            mode.push(Mode::Transmission);
        }
    }

    let model = ThreeSlope::default();
    let mut hop = |p: [f64; 2]| -> Result<f64> {
        // no placement guard around the surface; clamp exact coincidence
        let d = distance(p, RIS_POSITION).max(1e-9);
        let db = if config.shadowing {
            model.shadowed_gain_db(d, &mut rng)?
        } else {
            model.gain_db(d)?
        };
        Ok(10f64.powf((db + config.link_gain_db) / 10.0))
    };
    let beta_ap = ap_positions.iter().map(|&p| hop(p)).collect::<Result<Vec<_>>>()?;
    let beta_u = user_positions.iter().map(|&p| hop(p)).collect::<Result<Vec<_>>>()?;

    Ok(Scenario {
        seed,
        ap_positions,
        user_positions,
        ris_position: RIS_POSITION,
        beta_ap,
        beta_u,
        mode,
        pilots,
    })
}

impl Scenario {
    pub fn num_aps(&self) -> usize {
        self.beta_ap.len()
    }

    pub fn num_users(&self) -> usize {
        self.beta_u.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
