//! Fixtures shared by the criterion benches.

use starcf_core::{no_power_control, PowerAllocation, Surface, SystemConfig, SystemModel};

/// A Fig. 2-sized drop with `num_aps` APs and `num_users` users.
pub fn fixture(num_aps: usize, num_users: usize, seed: u64) -> (SystemModel, PowerAllocation) {
    let mut cfg = SystemConfig::default();
    cfg.num_aps = num_aps;
    cfg.set_users(num_users, 4);
    let model = SystemModel::build(cfg, seed, Surface::Star).expect("valid fixture config");
    let eta = no_power_control(&model.est, &model.config);
    (model, eta)
}
