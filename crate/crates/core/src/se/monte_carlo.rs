use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::estimation::{simulate_pilot_estimation, EstimationStatistics};
use crate::power::PowerAllocation;
use crate::ris::{sample_channel, StarRisState};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scenario::Scenario;

/// Trials per independent RNG stream. Fixed so results do not depend on the
/// thread count.
const CHUNK: usize = 256;

/// Empirical moments of the downlink effective channels.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub trials: usize,
    /// Mean of `G_mk^H Ghat_mk`, indexed `m * K + k`.
    pub gain: Vec<DMatrix<Complex64>>,
    /// Mean effective channel `D_k = E{C_kk}`.
    pub effective: Vec<DMatrix<Complex64>>,
    /// `sum_k' E{C_kk' C_kk'^H}` per user.
    pub second_moment: Vec<DMatrix<Complex64>>,
    /// Real diagonal of `effective`, K x N_u.
    pub d_bar: DMatrix<f64>,
    /// Real diagonal of `second_moment`, K x N_u.
    pub c_bar: DMatrix<f64>,
    /// Standard error of each `c_bar` entry.
    pub c_bar_stderr: DMatrix<f64>,
}

impl MomentEstimate {
    pub fn gain(&self, m: usize, k: usize) -> &DMatrix<Complex64> {
        &self.gain[m * self.d_bar.nrows() + k]
    }
}

#[derive(Clone)]
struct Accumulator {
    trials: usize,
    gain: Vec<DMatrix<Complex64>>,
    effective: Vec<DMatrix<Complex64>>,
    second_moment: Vec<DMatrix<Complex64>>,
    // per-trial sum over k' of ||row n of C_kk'||^2, squared
    c_sq: DMatrix<f64>,
}

impl Accumulator {
    fn new(m_count: usize, k_count: usize, n_u: usize) -> Self {
        let z = DMatrix::<Complex64>::zeros(n_u, n_u);
        Self {
            trials: 0,
            gain: vec![z.clone(); m_count * k_count],
            effective: vec![z.clone(); k_count],
            second_moment: vec![z; k_count],
            c_sq: DMatrix::zeros(k_count, n_u),
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.trials += other.trials;
        for (a, b) in self.gain.iter_mut().zip(&other.gain) {
            *a += b;
        }
        for (a, b) in self.effective.iter_mut().zip(&other.effective) {
            *a += b;
        }
        for (a, b) in self.second_moment.iter_mut().zip(&other.second_moment) {
            *a += b;
        }
        self.c_sq += &other.c_sq;
    }
}

/// Estimates `E{G_mk^H w_mk}`, `D_k` and `sum_k' E{C_kk' C_kk'^H}` with
/// `w_mk = Ghat_mk` and `C_kk' = sum_m sqrt(eta_mk') G_mk^H w_mk'`.
pub fn monte_carlo_moments<R: Rng + ?Sized>(
    scenario: &Scenario,
    ris: &StarRisState,
    est: &EstimationStatistics,
    eta: &PowerAllocation,
    config: &SystemConfig,
    trials: usize,
    rng: &mut R,
) -> MomentEstimate {
    let trials = trials.max(1);
    let m_count = scenario.num_aps();
    let k_count = scenario.num_users();
    let n_u = config.user_antennas;
    let base: u64 = rng.random();
    let chunks = trials.div_ceil(CHUNK);
    let sqrt_eta = eta.eta.map(f64::sqrt);

    let parts: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(base, c as u64));
            let count = CHUNK.min(trials - c * CHUNK);
            let mut acc = Accumulator::new(m_count, k_count, n_u);
            for _ in 0..count {
                let ch = sample_channel(scenario, ris, config.ap_antennas, n_u, &mut rng);
                let hat = simulate_pilot_estimation(&ch, est, &mut rng);
                let mut cross = vec![DMatrix::<Complex64>::zeros(n_u, n_u); m_count * k_count * k_count];
                for m in 0..m_count {
                    for k in 0..k_count {
                        let gh = ch.get(m, k).adjoint();
                        for kp in 0..k_count {
                            let prod = &gh * hat.get(m, kp);
                            if kp == k {
                                acc.gain[m * k_count + k] += &prod;
                            }
                            cross[(m * k_count + k) * k_count + kp] = prod;
                        }
                    }
                }
                for k in 0..k_count {
                    let mut row_power = vec![0.0; n_u];
                    for kp in 0..k_count {
                        let mut c = DMatrix::<Complex64>::zeros(n_u, n_u);
                        for m in 0..m_count {
                            c += &cross[(m * k_count + k) * k_count + kp] * Complex64::new(sqrt_eta[(m, kp)], 0.0);
                        }
                        if kp == k {
                            acc.effective[k] += &c;
                        }
                        acc.second_moment[k] += &c * c.adjoint();
                        for (n, p) in row_power.iter_mut().enumerate() {
                            *p += c.row(n).iter().map(|v| v.norm_sqr()).sum::<f64>();
                        }
                    }
                    for (n, p) in row_power.iter().enumerate() {
                        acc.c_sq[(k, n)] += p * p;
                    }
                }
                acc.trials += 1;
            }
            acc
        })
        .collect();

    let mut total = Accumulator::new(m_count, k_count, n_u);
    for p in &parts {
        total.merge(p);
    }
    let inv = Complex64::new(1.0 / total.trials as f64, 0.0);
    let gain: Vec<_> = total.gain.iter().map(|g| g * inv).collect();
    let effective: Vec<_> = total.effective.iter().map(|g| g * inv).collect();
    let second_moment: Vec<_> = total.second_moment.iter().map(|g| g * inv).collect();
    let d_bar = DMatrix::from_fn(k_count, n_u, |k, n| effective[k][(n, n)].re);
    let c_bar = DMatrix::from_fn(k_count, n_u, |k, n| second_moment[k][(n, n)].re);
    let t = total.trials as f64;
    let c_bar_stderr = DMatrix::from_fn(k_count, n_u, |k, n| {
        let mean = c_bar[(k, n)];
        let var = (total.c_sq[(k, n)] / t - mean * mean).max(0.0);
        (var / t).sqrt()
    });
    MomentEstimate {
        trials: total.trials,
        gain,
        effective,
        second_moment,
        d_bar,
        c_bar,
        c_bar_stderr,
    }
}
