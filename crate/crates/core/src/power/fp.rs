//! Ratio-of-quadratics form of the SINR and the Lagrangian-dual /
//! quadratic-transform objectives built on it.
//!
//! With `zeta_k` the k-th column of `zeta`:
//!
//! ```text
//! A_k(zeta) = (a_k^T zeta_k)^2
//! B_k(zeta) = sum_{k' in P_k} zeta_k'^T (K1_kk' + K3_kk') zeta_k'
//!           + sum_{k'}        zeta_k'^T (K2_kk' + K4_kk') zeta_k' - A_k + sigma^2
//! ```
//!
//! Every coefficient is independent of the stream index, so `A` and `B` are
//! computed once per user and shared by its `N_u` streams.

use nalgebra::{DMatrix, DVector};

use crate::config::SystemConfig;
use crate::estimation::EstimationStatistics;
use crate::ris::ChannelStatistics;
use crate::scenario::PilotAssignment;

#[derive(Debug, Clone)]
pub struct FpCoefficients {
    pub streams: usize,
    /// `a_mk = sqrt(z_mk) N_ap`, M x K.
    pub a: DMatrix<f64>,
    /// Diagonal of `K1_kk'`, indexed `k * K + k'`.
    pub k1: Vec<DVector<f64>>,
    /// Diagonal of `K2_kk'`.
    pub k2: Vec<DVector<f64>>,
    pub k3: Vec<DMatrix<f64>>,
    pub k4: Vec<DMatrix<f64>>,
    pub noise_power: f64,
    pub pilots: PilotAssignment,
}

impl FpCoefficients {
    pub fn num_aps(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.a.ncols()
    }

    fn idx(&self, k: usize, kp: usize) -> usize {
        k * self.num_users() + kp
    }

    /// `K1_kk' + K3_kk'` as a dense matrix.
    pub fn pilot_block(&self, k: usize, kp: usize) -> DMatrix<f64> {
        let i = self.idx(k, kp);
        &self.k3[i] + DMatrix::from_diagonal(&self.k1[i])
    }

    /// `K2_kk' + K4_kk'` as a dense matrix.
    pub fn shared_block(&self, k: usize, kp: usize) -> DMatrix<f64> {
        let i = self.idx(k, kp);
        &self.k4[i] + DMatrix::from_diagonal(&self.k2[i])
    }

    fn quad(&self, k: usize, kp: usize, zeta: &DMatrix<f64>) -> f64 {
        let i = self.idx(k, kp);
        let col = zeta.column(kp);
        let mut acc = 0.0;
        if self.pilots.shares_pilot(k, kp) {
            acc += self.k1[i].iter().zip(col.iter()).map(|(d, z)| d * z * z).sum::<f64>();
            acc += (col.transpose() * &self.k3[i] * col)[(0, 0)];
        }
        acc += self.k2[i].iter().zip(col.iter()).map(|(d, z)| d * z * z).sum::<f64>();
        acc += (col.transpose() * &self.k4[i] * col)[(0, 0)];
        acc
    }

    /// `A_k` and `B_k` for every user.
    pub fn ratio_terms(&self, zeta: &DMatrix<f64>) -> RatioTerms {
        let k_count = self.num_users();
        let mut a = Vec::with_capacity(k_count);
        let mut b = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let s = self.a.column(k).dot(&zeta.column(k));
            let ak = s * s;
            let total: f64 = (0..k_count).map(|kp| self.quad(k, kp, zeta)).sum();
            a.push(ak);
            b.push(total - ak + self.noise_power);
        }
        RatioTerms { a, b }
    }
}

/// Per-user numerator and denominator of the SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTerms {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl RatioTerms {
    pub fn sinr(&self, k: usize) -> f64 {
        self.a[k] / self.b[k]
    }
}

fn outer(v: &DVector<f64>, scale: f64) -> DMatrix<f64> {
    v * v.transpose() * scale
}

/// Builds `a`, `K1..K4` from the channel and estimation statistics.
pub fn build_fp_coefficients(
    chan: &ChannelStatistics,
    est: &EstimationStatistics,
    config: &SystemConfig,
) -> FpCoefficients {
    let (m_count, k_count) = est.z.shape();
    let n_ap = config.ap_antennas as f64;
    let n_u = config.user_antennas as f64;
    let delta = &chan.delta_bar;
    let xi = &est.pilot_coeff;
    let a = est.z.map(|z| z.sqrt() * n_ap);

    let mut k1 = Vec::with_capacity(k_count * k_count);
    let mut k2 = Vec::with_capacity(k_count * k_count);
    let mut k3 = Vec::with_capacity(k_count * k_count);
    let mut k4 = Vec::with_capacity(k_count * k_count);
    for k in 0..k_count {
        let ek = est.pilot_energy(k);
        for kp in 0..k_count {
            let ekp_sqrt = est.pilot_energy(kp).sqrt();
            k1.push(DVector::from_fn(m_count, |m, _| {
                est.z_bar[(m, kp)] / (ekp_sqrt * delta[(m, kp)])
                    * ek
                    * (chan.beta_ap[m] * chan.beta_u[k]).powi(2)
                    * chan.trace_sq(k)
                    * n_ap
            }));
            k2.push(DVector::from_fn(m_count, |m, _| {
                est.z_bar[(m, kp)] * n_u * n_ap * delta[(m, k)] / (ekp_sqrt * delta[(m, kp)])
                    * est.pilot_denominator[(m, kp)]
            }));
            // [K3]_{mm'} = sqrt(z_mk' z_m'k') xi_k Dbar_mk Dbar_m'k N_ap^2 / (xi_k' Dbar_mk' Dbar_m'k')
            let v3 = DVector::from_fn(m_count, |m, _| est.z[(m, kp)].sqrt() * delta[(m, k)] / delta[(m, kp)]);
            k3.push(outer(&v3, xi[k] / xi[kp] * n_ap * n_ap));
            // [K4]_{mm'} = sqrt(z_mk' z_m'k') N_u N_ap^2 / (xi_k' Dbar_mk' Dbar_m'k')
            //              * sum_{k'' in P_k'} xi_k'' b_ap,m b_ap,m' b_u,k b_u,k'' tr(T_k T_k'')
            let v4 = DVector::from_fn(m_count, |m, _| est.z[(m, kp)].sqrt() * chan.beta_ap[m] / delta[(m, kp)]);
            let group: f64 = est
                .pilots
                .members(kp)
                .iter()
                .map(|&j| xi[j] * chan.beta_u[k] * chan.beta_u[j] * chan.cross_trace(k, j))
                .sum();
            k4.push(outer(&v4, n_u * n_ap * n_ap / xi[kp] * group));
        }
    }
    FpCoefficients {
        streams: config.user_antennas,
        a,
        k1,
        k2,
        k3,
        k4,
        noise_power: config.noise_power,
        pilots: est.pilots.clone(),
    }
}

/// `gamma_kn = A_k / B_k`, K x N_u.
pub fn update_gamma(coeffs: &FpCoefficients, zeta: &DMatrix<f64>) -> DMatrix<f64> {
    let t = coeffs.ratio_terms(zeta);
    DMatrix::from_fn(coeffs.num_users(), coeffs.streams, |k, _| t.sinr(k))
}

/// `varpi_kn = sqrt((1 + gamma_kn) A_k) / (A_k + B_k)`, K x N_u.
pub fn update_varpi(coeffs: &FpCoefficients, zeta: &DMatrix<f64>, gamma: &DMatrix<f64>) -> DMatrix<f64> {
    let t = coeffs.ratio_terms(zeta);
    DMatrix::from_fn(coeffs.num_users(), coeffs.streams, |k, n| {
        ((1.0 + gamma[(k, n)]) * t.a[k]).sqrt() / (t.a[k] + t.b[k])
    })
}

/// Lagrangian-dual objective (natural log):
/// `sum_{k,n} ln(1 + gamma) - gamma + (1 + gamma) A / (A + B)`.
pub fn evaluate_objective(coeffs: &FpCoefficients, zeta: &DMatrix<f64>, gamma: &DMatrix<f64>) -> f64 {
    let t = coeffs.ratio_terms(zeta);
    let mut f = 0.0;
    for k in 0..coeffs.num_users() {
        for n in 0..coeffs.streams {
            let g = gamma[(k, n)];
            f += (1.0 + g).ln() - g + (1.0 + g) * t.a[k] / (t.a[k] + t.b[k]);
        }
    }
    f
}

/// Quadratic-transform objective
/// `sum_{k,n} 2 varpi sqrt(1 + gamma) a_k^T zeta_k - varpi^2 (A + B)`.
pub fn evaluate_f2(
    coeffs: &FpCoefficients,
    zeta: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    varpi: &DMatrix<f64>,
) -> f64 {
    let t = coeffs.ratio_terms(zeta);
    let mut f = 0.0;
    for k in 0..coeffs.num_users() {
        let lin = coeffs.a.column(k).dot(&zeta.column(k));
        for n in 0..coeffs.streams {
            let w = varpi[(k, n)];
            f += 2.0 * w * (1.0 + gamma[(k, n)]).sqrt() * lin - w * w * (t.a[k] + t.b[k]);
        }
    }
    f
}
