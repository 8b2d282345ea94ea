#![allow(dead_code)]

use nalgebra::DMatrix;
use starcf_core::power::{evaluate_f2, FpCoefficients};
use starcf_core::scenario::Mode;
use starcf_core::{EstimationStatistics, PowerAllocation, Surface, SystemConfig, SystemModel};

pub fn config(m: usize, k: usize, n_u: usize) -> SystemConfig {
    let mut cfg = SystemConfig::default();
    cfg.num_aps = m;
    cfg.set_users(k, n_u);
    cfg
}

pub fn model(m: usize, k: usize, n_u: usize, seed: u64) -> SystemModel {
    SystemModel::build(config(m, k, n_u), seed, Surface::Star).unwrap()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Random feasible allocation: uniform weights scaled so each AP spends a
/// random fraction of its budget.
pub fn random_allocation(est: &EstimationStatistics, cfg: &SystemConfig, rng: &mut impl rand::Rng) -> PowerAllocation {
    let (m_count, k_count) = est.z.shape();
    let r2 = cfg.zeta_budget();
    let mut zeta = DMatrix::zeros(m_count, k_count);
    for m in 0..m_count {
        let w: Vec<f64> = (0..k_count).map(|_| rng.random::<f64>()).collect();
        let norm2: f64 = w.iter().map(|x| x * x).sum();
        let frac: f64 = rng.random_range(0.05..1.0);
        for k in 0..k_count {
            zeta[(m, k)] = w[k] * (frac * r2 / norm2).sqrt();
        }
    }
    PowerAllocation::from_zeta(zeta, &est.z)
}

/// Dense search over `zeta >= 0`, `sum_k zeta_mk^2 <= r2` for M = K = 2 in
/// polar coordinates per AP. Returns the best `f2` and its argument.
pub fn grid_max_f2(
    coeffs: &FpCoefficients,
    gamma: &DMatrix<f64>,
    varpi: &DMatrix<f64>,
    r2: f64,
    steps: usize,
) -> (f64, DMatrix<f64>) {
    assert_eq!((coeffs.num_aps(), coeffs.num_users()), (2, 2));
    let r = r2.sqrt();
    let pts: Vec<(f64, f64)> = (0..=steps)
        .flat_map(|i| {
            (0..=steps).map(move |j| {
                let rho = r * i as f64 / steps as f64;
                let th = std::f64::consts::FRAC_PI_2 * j as f64 / steps as f64;
                (rho * th.cos(), rho * th.sin())
            })
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut arg = DMatrix::zeros(2, 2);
    let mut z = DMatrix::zeros(2, 2);
    for &(a0, a1) in &pts {
        z[(0, 0)] = a0;
        z[(0, 1)] = a1;
        for &(b0, b1) in &pts {
            z[(1, 0)] = b0;
            z[(1, 1)] = b1;
            let f = evaluate_f2(coeffs, &z, gamma, varpi);
            if f > best {
                best = f;
                arg = z.clone();
            }
        }
    }
    (best, arg)
}

/// Literal transcription of the four-term second moment with scalar loops,
/// traces taken directly from the surface coupling matrices.
pub fn c_bar_scalar(model: &SystemModel, eta: &DMatrix<f64>, k: usize) -> f64 {
    let cfg = &model.config;
    let est = &model.est;
    let sc = &model.scenario;
    let (m_count, k_count) = est.z.shape();
    let n_ap = cfg.ap_antennas as f64;
    let n_u = cfg.user_antennas as f64;
    let sigma2 = cfg.noise_power;
    let tp = cfg.pilot_len as f64 * cfg.pilot_power;
    let xi = cfg.pilot_coeff;
    let t = |mode: Mode| &model.ris.coupling(mode).matrix;
    let tr_pair = |a: usize, b: usize| (t(sc.mode[a]) * t(sc.mode[b])).trace().re;
    let delta = |m: usize, j: usize| {
        let tr = t(sc.mode[j]).trace().re;
        sc.beta_ap[m] * sc.beta_u[j] * tr
    };
    let same = |a: usize, b: usize| sc.pilots.group_of[a] == sc.pilots.group_of[b];

    let mut c = 0.0;
    for kp in 0..k_count {
        for m in 0..m_count {
            let zb = est.z_bar[(m, kp)];
            if same(k, kp) {
                c += eta[(m, kp)] * zb * zb * tp * xi
                    * (sc.beta_ap[m].powi(2) * sc.beta_u[k].powi(2) * tr_pair(k, k) * n_ap);
            }
            let mut inner = sigma2;
            for kpp in 0..k_count {
                if same(kp, kpp) {
                    inner += tp * xi * delta(m, kpp);
                }
            }
            c += eta[(m, kp)] * zb * zb * n_u * n_ap * delta(m, k) * inner;
        }
        for m in 0..m_count {
            for mp in 0..m_count {
                let w = (eta[(m, kp)] * eta[(mp, kp)]).sqrt() * est.z_bar[(m, kp)] * est.z_bar[(mp, kp)];
                if same(k, kp) {
                    c += w * tp * xi * delta(m, k) * delta(mp, k) * n_ap * n_ap;
                }
                let mut s = 0.0;
                for kpp in 0..k_count {
                    if same(kp, kpp) {
                        s += tp * xi * sc.beta_ap[m] * sc.beta_ap[mp] * sc.beta_u[k] * sc.beta_u[kpp]
                            * tr_pair(k, kpp) * n_ap * n_ap;
                    }
                }
                c += w * n_u * s;
            }
        }
    }
    c
}
