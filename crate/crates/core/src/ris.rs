//! Surface spatial correlation, energy-splitting coefficients, coupling
//! matrices `T_w = A^2 R^{1/2} Theta_w R Theta_w^H R^{1/2}` and the aggregate
//! second-order channel statistics built from them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{complex_normal, derive_seed, rng_from_seed, stream};
use crate::scenario::{Mode, Scenario};

/// Normalized sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// `[R]_{x,y} = sinc(2 |u_x - u_y| / lambda)` for a `cols x rows` planar grid,
/// element `x` sitting at `(mod(x, cols) d_h, floor(x / cols) d_v)`.
pub fn build_correlation(cols: usize, rows: usize, d_h: f64, d_v: f64, wavelength: f64) -> DMatrix<f64> {
    let l = cols * rows;
    let pos: Vec<(f64, f64)> = (0..l)
        .map(|x| ((x % cols) as f64 * d_h, (x / cols) as f64 * d_v))
        .collect();
    DMatrix::from_fn(l, l, |i, j| {
        if i == j {
            1.0
        } else {
            let d = (pos[i].0 - pos[j].0).hypot(pos[i].1 - pos[j].1);
            sinc(2.0 * d / wavelength)
        }
    })
}

/// Symmetric square root with eigenvalues floored at zero.
pub fn psd_sqrt(r: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (r + r.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * roots[j]);
    let s = &scaled * v.transpose();
    (&s + s.transpose()) * 0.5
}

/// Diagonal of an element-coefficient matrix `Theta = diag(u_l e^{i phi_l})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta(pub DVector<Complex64>);

impl Theta {
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&self.0)
    }
}

pub fn build_theta(amp: &[f64], phase: &[f64]) -> Result<Theta> {
    if amp.len() != phase.len() {
        return Err(Error::InvalidArgument(format!(
            "amplitude and phase lengths differ ({} vs {})",
            amp.len(),
            phase.len()
        )));
    }
    if let Some((l, u)) = amp.iter().enumerate().find(|(_, u)| !(0.0..=1.0).contains(*u)) {
        return Err(Error::InvalidArgument(format!(
            "amplitude of element {l} is {u}, outside [0, 1]"
        )));
    }
    Ok(Theta(DVector::from_iterator(
        amp.len(),
        amp.iter().zip(phase).map(|(&u, &p)| Complex64::from_polar(u, p)),
    )))
}

/// A coupling matrix `T` together with `tr(T)` and `tr(T^2)`.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub matrix: DMatrix<Complex64>,
    pub trace: f64,
    pub trace_sq: f64,
}

/// `Re tr(A B)` without forming the product.
pub fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

fn hermitize(m: &mut DMatrix<Complex64>) {
    let h = m.adjoint();
    *m = (&*m + h) * Complex64::new(0.5, 0.0);
}

pub fn coupling_matrix(r: &DMatrix<f64>, r_sqrt: &DMatrix<f64>, theta: &Theta, area: f64) -> Coupling {
    let th = &theta.0;
    // Theta R Theta^H
    let inner = DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| th[i] * r[(i, j)] * th[j].conj());
    let rs = to_complex(r_sqrt);
    let mut t = &rs * inner * &rs * Complex64::new(area * area, 0.0);
    hermitize(&mut t);
    let trace = t.trace().re;
    let trace_sq = trace_of_product(&t, &t);
    Coupling {
        matrix: t,
        trace,
        trace_sq,
    }
}

/// Per-mode traces: `tr(T_w)`, `tr(T_w^2)` and the mixed `tr(T_r T_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTraces {
    pub trace: [f64; 2],
    pub trace_sq: [f64; 2],
    pub trace_cross: f64,
}

impl ModeTraces {
    pub fn trace(&self, mode: Mode) -> f64 {
        self.trace[mode.index()]
    }

    /// `tr(T_a T_b)`.
    pub fn cross(&self, a: Mode, b: Mode) -> f64 {
        if a == b {
            self.trace_sq[a.index()]
        } else {
            self.trace_cross
        }
    }
}

#[derive(Debug, Clone)]
pub struct StarRisState {
    pub correlation: DMatrix<f64>,
    pub correlation_sqrt: DMatrix<f64>,
    pub element_area: f64,
    pub amp_r: Vec<f64>,
    pub amp_t: Vec<f64>,
    pub phase_r: Vec<f64>,
    pub phase_t: Vec<f64>,
    pub t_r: Coupling,
    pub t_t: Coupling,
    pub traces: ModeTraces,
    cascade: [DMatrix<Complex64>; 2],
}

/// Tolerance on `(u^t)^2 + (u^r)^2 = 1`.
pub const ENERGY_SPLIT_TOL: f64 = 1e-12;

impl StarRisState {
    pub fn new(
        config: &SystemConfig,
        amp_r: Vec<f64>,
        amp_t: Vec<f64>,
        phase_r: Vec<f64>,
        phase_t: Vec<f64>,
    ) -> Result<Self> {
        let l = config.num_elements();
        if [amp_r.len(), amp_t.len(), phase_r.len(), phase_t.len()]
            .iter()
            .any(|&n| n != l)
        {
            return Err(Error::InvalidArgument(format!(
                "surface coefficient vectors must have length L = {l}"
            )));
        }
        for (i, (r, t)) in amp_r.iter().zip(&amp_t).enumerate() {
            let err = (r * r + t * t - 1.0).abs();
            if err >= ENERGY_SPLIT_TOL {
                return Err(Error::InvalidArgument(format!(
                    "element {i} violates energy splitting: |u_r^2 + u_t^2 - 1| = {err:e}"
                )));
            }
        }
        let theta_r = build_theta(&amp_r, &phase_r)?;
        let theta_t = build_theta(&amp_t, &phase_t)?;
        let correlation = build_correlation(
            config.ris_cols,
            config.ris_rows,
            config.element_width,
            config.element_height,
            config.wavelength,
        );
        let correlation_sqrt = psd_sqrt(&correlation);
        let area = config.element_area();
        let t_r = coupling_matrix(&correlation, &correlation_sqrt, &theta_r, area);
        let t_t = coupling_matrix(&correlation, &correlation_sqrt, &theta_t, area);
        let traces = ModeTraces {
            trace: [t_r.trace, t_t.trace],
            trace_sq: [t_r.trace_sq, t_t.trace_sq],
            trace_cross: trace_of_product(&t_r.matrix, &t_t.matrix),
        };
        let rs = to_complex(&correlation_sqrt);
        let cascade_of = |th: &Theta| {
            let scaled = DMatrix::from_fn(l, l, |i, j| th.0[i] * rs[(i, j)]);
            &rs * scaled * Complex64::new(area, 0.0)
        };
        let cascade = [cascade_of(&theta_r), cascade_of(&theta_t)];
        Ok(Self {
            correlation,
            correlation_sqrt,
            element_area: area,
            amp_r,
            amp_t,
            phase_r,
            phase_t,
            t_r,
            t_t,
            traces,
            cascade,
        })
    }

    /// Equal energy split `u^r = u^t = 1/sqrt(2)` with phases drawn uniformly
    /// once from `seed`.
    pub fn star(config: &SystemConfig, seed: u64) -> Result<Self> {
        let l = config.num_elements();
        let (phase_r, phase_t) = random_phases(l, seed);
        let amp = vec![std::f64::consts::FRAC_1_SQRT_2; l];
        Self::new(config, amp.clone(), amp, phase_r, phase_t)
    }

    /// Two co-located conventional surfaces of `L/2` elements each: the first
    /// half of the grid only reflects, the second half only transmits.
    pub fn conventional_pair(config: &SystemConfig, seed: u64) -> Result<Self> {
        let l = config.num_elements();
        let (phase_r, phase_t) = random_phases(l, seed);
        let amp_r: Vec<f64> = (0..l).map(|i| if i < l / 2 { 1.0 } else { 0.0 }).collect();
        let amp_t: Vec<f64> = amp_r.iter().map(|u| 1.0 - u).collect();
        Self::new(config, amp_r, amp_t, phase_r, phase_t)
    }

    pub fn num_elements(&self) -> usize {
        self.amp_r.len()
    }

    pub fn coupling(&self, mode: Mode) -> &Coupling {
        match mode {
            Mode::Reflection => &self.t_r,
            Mode::Transmission => &self.t_t,
        }
    }

    /// `A R^{1/2} Theta_w R^{1/2}`, the surface part of the cascaded channel.
    pub fn cascade(&self, mode: Mode) -> &DMatrix<Complex64> {
        &self.cascade[mode.index()]
    }

    /// Largest `|(u^t)^2 + (u^r)^2 - 1|` over elements.
    pub fn energy_split_error(&self) -> f64 {
        self.amp_r
            .iter()
            .zip(&self.amp_t)
            .map(|(r, t)| (r * r + t * t - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn random_phases(l: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(derive_seed(seed, stream::SURFACE_PHASES));
    let phase_r = (0..l).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let phase_t = (0..l).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    (phase_r, phase_t)
}

/// Second-order channel statistics. The covariance of `vec(G_mk)` is
/// `delta_bar[(m, k)] * I`, never materialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelStatistics {
    /// `beta_ap,m * beta_u,k * tr(T_{w_k})`, M x K.
    pub delta_bar: DMatrix<f64>,
    pub beta_ap: Vec<f64>,
    pub beta_u: Vec<f64>,
    pub mode: Vec<Mode>,
    pub traces: ModeTraces,
}

impl ChannelStatistics {
    pub fn num_aps(&self) -> usize {
        self.beta_ap.len()
    }

    pub fn num_users(&self) -> usize {
        self.beta_u.len()
    }

    /// `tr(T_{w_k} T_{w_j})`.
    pub fn cross_trace(&self, k: usize, j: usize) -> f64 {
        self.traces.cross(self.mode[k], self.mode[j])
    }

    pub fn trace_sq(&self, k: usize) -> f64 {
        self.traces.trace_sq[self.mode[k].index()]
    }
}

pub fn channel_covariance(scenario: &Scenario, ris: &StarRisState) -> ChannelStatistics {
    let m = scenario.num_aps();
    let k = scenario.num_users();
    let delta_bar = DMatrix::from_fn(m, k, |i, j| {
        scenario.beta_ap[i] * scenario.beta_u[j] * ris.traces.trace(scenario.mode[j])
    });
    ChannelStatistics {
        delta_bar,
        beta_ap: scenario.beta_ap.clone(),
        beta_u: scenario.beta_u.clone(),
        mode: scenario.mode.clone(),
        traces: ris.traces,
    }
}

/// One joint draw of all `G_mk` (`N_ap x N_u`).
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub num_aps: usize,
    pub num_users: usize,
    pub g: Vec<DMatrix<Complex64>>,
}

impl ChannelRealization {
    pub fn get(&self, m: usize, k: usize) -> &DMatrix<Complex64> {
        &self.g[m * self.num_users + k]
    }
}

pub(crate) fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    // column-major fill
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// `G_mk = sqrt(beta_ap,m beta_u,k) V_ap,m (A R^{1/2} Theta_{w_k} R^{1/2}) V_u,k`
/// with fresh CN(0, 1) fast-fading matrices.
pub fn sample_channel<R: Rng + ?Sized>(
    scenario: &Scenario,
    ris: &StarRisState,
    ap_antennas: usize,
    user_antennas: usize,
    rng: &mut R,
) -> ChannelRealization {
    let m_count = scenario.num_aps();
    let k_count = scenario.num_users();
    let l = ris.num_elements();
    let user_side: Vec<DMatrix<Complex64>> = (0..k_count)
        .map(|_| random_matrix(l, user_antennas, rng))
        .collect();
    let mut g = Vec::with_capacity(m_count * k_count);
    for m in 0..m_count {
        let v_ap = random_matrix(ap_antennas, l, rng);
        let through = [
            &v_ap * ris.cascade(Mode::Reflection),
            &v_ap * ris.cascade(Mode::Transmission),
        ];
        for k in 0..k_count {
            let scale = (scenario.beta_ap[m] * scenario.beta_u[k]).sqrt();
            let gmk = &through[scenario.mode[k].index()] * &user_side[k] * Complex64::new(scale, 0.0);
            g.push(gmk);
        }
    }
    ChannelRealization {
        num_aps: m_count,
        num_users: k_count,
        g,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::generate_scenario;

    fn small_config() -> SystemConfig {
        let mut cfg = SystemConfig::default();
        cfg.num_aps = 4;
        cfg.set_users(4, 2);
        cfg
    }

    #[test]
    fn correlation_unit_diagonal_and_symmetric() {
        let lambda = 0.1578;
        let r = build_correlation(4, 3, lambda / 4.0, lambda / 4.0, lambda);
        for i in 0..12 {
            assert_eq!(r[(i, i)], 1.0);
            for j in 0..12 {
                assert_eq!(r[(i, j)], r[(j, i)]);
            }
        }
        // horizontal neighbours at lambda/4: sinc(0.5) = 2/pi
        assert!((r[(0, 1)] - 2.0 / PI).abs() < 1e-15);
        // vertical neighbours
        assert!((r[(0, 4)] - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn half_wavelength_grid_is_identity() {
        let lambda = 0.2;
        let r = build_correlation(3, 1, lambda / 2.0, lambda / 2.0, lambda);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((r[(i, j)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let lambda = 0.1578;
        let r = build_correlation(4, 4, lambda / 4.0, lambda / 4.0, lambda);
        let s = psd_sqrt(&r);
        let back = &s * &s;
        assert!((back - &r).norm() < 1e-10 * r.norm());
    }

    #[test]
    fn theta_identity_and_modulus() {
        let th = build_theta(&[1.0; 3], &[0.0; 3]).unwrap();
        assert_eq!(th.to_matrix(), DMatrix::identity(3, 3));
        let th = build_theta(&[0.3, 0.9], &[1.0, 5.0]).unwrap();
        assert!((th.0[0].norm() - 0.3).abs() < 1e-15);
        assert!((th.0[1].norm() - 0.9).abs() < 1e-15);
        assert!(build_theta(&[1.2], &[0.0]).is_err());
        assert!(build_theta(&[-0.1], &[0.0]).is_err());
    }

    #[test]
    fn coupling_collapses_for_identity() {
        let r = DMatrix::<f64>::identity(5, 5);
        let th = build_theta(&[1.0; 5], &[0.0; 5]).unwrap();
        let a = 0.3;
        let c = coupling_matrix(&r, &r, &th, a);
        assert!((c.trace - a * a * 5.0).abs() < 1e-15);
        let expect = DMatrix::<Complex64>::identity(5, 5) * Complex64::new(a * a, 0.0);
        assert!((c.matrix - expect).norm() < 1e-15);
    }

    #[test]
    fn energy_split_traces_sum_under_identity_correlation() {
        let r = DMatrix::<f64>::identity(4, 4);
        let ur = [0.2, 0.5, 0.9, 1.0];
        let ut: Vec<f64> = ur.iter().map(|u: &f64| (1.0 - u * u).sqrt()).collect();
        let ph = [0.3, 1.1, 2.0, 4.0];
        let a = 0.7;
        let tr = coupling_matrix(&r, &r, &build_theta(&ur, &ph).unwrap(), a).trace;
        let tt = coupling_matrix(&r, &r, &build_theta(&ut, &ph).unwrap(), a).trace;
        assert!((tr + tt - a * a * 4.0).abs() < 1e-14);
    }

    #[test]
    fn trace_matches_cyclic_form() {
        let cfg = small_config();
        let ris = StarRisState::star(&cfg, 3).unwrap();
        let r = to_complex(&ris.correlation);
        let th = build_theta(&ris.amp_r, &ris.phase_r).unwrap().to_matrix();
        let a2 = ris.element_area.powi(2);
        let cyclic = (&th * &r * th.adjoint() * &r).trace().re * a2;
        assert!((cyclic - ris.t_r.trace).abs() < 1e-12 * cyclic.abs());
    }

    #[test]
    fn coupling_hermitian_psd() {
        let cfg = small_config();
        for state in [StarRisState::star(&cfg, 8).unwrap(), StarRisState::conventional_pair(&cfg, 8).unwrap()] {
            for c in [&state.t_r, &state.t_t] {
                let diff = (&c.matrix - c.matrix.adjoint()).norm();
                assert!(diff <= 1e-15 * c.matrix.norm());
                let herm = (&c.matrix + c.matrix.adjoint()) * Complex64::new(0.5, 0.0);
                let min = herm.symmetric_eigenvalues().min();
                assert!(min >= -1e-10 * c.trace, "{min}");
                assert!(c.trace > 0.0 && c.trace_sq > 0.0);
            }
            assert!(state.traces.trace_cross >= 0.0);
            assert!(state.energy_split_error() < ENERGY_SPLIT_TOL);
        }
    }

    #[test]
    fn rejects_energy_split_violation() {
        let cfg = small_config();
        let l = cfg.num_elements();
        let res = StarRisState::new(&cfg, vec![0.5; l], vec![0.5; l], vec![0.0; l], vec![0.0; l]);
        assert!(res.is_err());
    }

    #[test]
    fn covariance_uses_own_mode_and_is_linear() {
        let cfg = small_config();
        let mut sc = generate_scenario(&cfg, 2).unwrap();
        let ris = StarRisState::conventional_pair(&cfg, 2).unwrap();
        let stats = channel_covariance(&sc, &ris);
        for (k, mode) in sc.mode.iter().enumerate() {
            let expect = sc.beta_ap[0] * sc.beta_u[k] * ris.coupling(*mode).trace;
            assert_eq!(stats.delta_bar[(0, k)], expect);
        }
        sc.beta_ap[1] *= 2.0;
        let doubled = channel_covariance(&sc, &ris);
        for k in 0..sc.num_users() {
            assert!((doubled.delta_bar[(1, k)] - 2.0 * stats.delta_bar[(1, k)]).abs() <= 1e-15 * stats.delta_bar[(1, k)]);
            assert_eq!(doubled.delta_bar[(0, k)], stats.delta_bar[(0, k)]);
        }
        // equal beta_u and mode -> equal columns
        sc.beta_u[1] = sc.beta_u[0];
        let st = channel_covariance(&sc, &ris);
        assert_eq!(sc.mode[0], sc.mode[1]);
        for m in 0..sc.num_aps() {
            assert_eq!(st.delta_bar[(m, 0)], st.delta_bar[(m, 1)]);
        }
    }
}
