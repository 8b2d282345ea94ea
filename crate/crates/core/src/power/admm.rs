//! ADMM solver for the quadratic-transform subproblem and the outer
//! fractional-programming loop.
//!
//! The subproblem `max f2(zeta)` over the per-AP balls is split into a
//! `zeta`-step (one `M x M` SPD solve per user), a `q`-step (projection of
//! each AP's row onto its ball) and a scaled dual update `u <- q - zeta + u`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::fp::{build_fp_coefficients, evaluate_f2, evaluate_objective, update_gamma, update_varpi, FpCoefficients};
use super::PowerAllocation;
use crate::config::{FpStopRule, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::EstimationStatistics;
use crate::ris::ChannelStatistics;

/// Euclidean projection onto `{q : ||q||^2 <= radius2}`:
/// `q = min(1, sqrt(radius2 / ||nu||^2)) nu`.
pub fn project_ball(nu: &[f64], radius2: f64) -> Vec<f64> {
    let norm2: f64 = nu.iter().map(|v| v * v).sum();
    if norm2 <= radius2 || norm2 == 0.0 {
        return nu.to_vec();
    }
    let s = (radius2 / norm2).sqrt();
    nu.iter().map(|v| v * s).collect()
}

/// Projection onto the ball intersected with the non-negative orthant
/// (clip, then scale).
pub fn project_nonneg_ball(nu: &[f64], radius2: f64) -> Vec<f64> {
    let clipped: Vec<f64> = nu.iter().map(|v| v.max(0.0)).collect();
    project_ball(&clipped, radius2)
}

/// `Abar_k = sum_{j in P_k} W_j (K1_jk + K3_jk) + sum_j W_j (K2_jk + K4_jk) + penalty/2 I`
/// with `W_j = sum_n varpi_jn^2`.
pub fn assemble_zeta_system(coeffs: &FpCoefficients, varpi: &DMatrix<f64>, penalty: f64) -> Vec<DMatrix<f64>> {
    let m_count = coeffs.num_aps();
    let k_count = coeffs.num_users();
    let weight: Vec<f64> = (0..k_count)
        .map(|j| varpi.row(j).iter().map(|w| w * w).sum())
        .collect();
    (0..k_count)
        .map(|k| {
            let mut abar = DMatrix::<f64>::identity(m_count, m_count) * (penalty / 2.0);
            for j in 0..k_count {
                if weight[j] == 0.0 {
                    continue;
                }
                if coeffs.pilots.shares_pilot(j, k) {
                    abar += coeffs.pilot_block(j, k) * weight[j];
                }
                abar += coeffs.shared_block(j, k) * weight[j];
            }
            (&abar + abar.transpose()) * 0.5
        })
        .collect()
}

/// Factored `zeta`-step: `zeta_k = Abar_k^{-1} (b_k + penalty/2 (q_k + u_k))`
/// with `b_k = sum_n varpi_kn sqrt(1 + gamma_kn) a_k`.
pub struct ZetaSolver {
    factors: Vec<Cholesky<f64, Dyn>>,
    linear: Vec<DVector<f64>>,
    half_penalty: f64,
}

impl ZetaSolver {
    pub fn new(coeffs: &FpCoefficients, gamma: &DMatrix<f64>, varpi: &DMatrix<f64>, penalty: f64) -> Result<Self> {
        let systems = assemble_zeta_system(coeffs, varpi, penalty);
        let factors = systems
            .into_iter()
            .enumerate()
            .map(|(k, a)| {
                a.cholesky()
                    .ok_or_else(|| Error::Divergence(format!("zeta system of user {k} is not positive definite")))
            })
            .collect::<Result<Vec<_>>>()?;
        let linear = (0..coeffs.num_users())
            .map(|k| {
                let w: f64 = (0..coeffs.streams)
                    .map(|n| varpi[(k, n)] * (1.0 + gamma[(k, n)]).sqrt())
                    .sum();
                coeffs.a.column(k) * w
            })
            .collect();
        Ok(Self {
            factors,
            linear,
            half_penalty: penalty / 2.0,
        })
    }

    pub fn solve(&self, q: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut zeta = DMatrix::zeros(q.nrows(), q.ncols());
        for (k, ch) in self.factors.iter().enumerate() {
            let rhs = &self.linear[k] + (q.column(k) + u.column(k)) * self.half_penalty;
            zeta.set_column(k, &ch.solve(&rhs));
        }
        zeta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    /// Final feasible copy `q`.
    pub zeta: DMatrix<f64>,
    pub iterations: usize,
    /// `||zeta - q|| / ||zeta||` at exit.
    pub residual: f64,
    pub hit_cap: bool,
}

fn project_rows(nu: &DMatrix<f64>, radius2: f64) -> DMatrix<f64> {
    let mut q = nu.clone();
    for m in 0..nu.nrows() {
        let row: Vec<f64> = nu.row(m).iter().copied().collect();
        for (k, v) in project_nonneg_ball(&row, radius2).into_iter().enumerate() {
            q[(m, k)] = v;
        }
    }
    q
}

fn relative(a: &DMatrix<f64>, b: &DMatrix<f64>, scale: f64) -> f64 {
    let d = (a - b).norm();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

/// Runs the ADMM iterations for fixed `gamma`, `varpi`, starting from
/// `q = zeta0` (projected) and `u = 0`. Stops once both the primal residual
/// `||zeta - q|| / ||zeta||` and the change `||q - q_prev|| / ||q||` are
/// within `eps_admm`.
pub fn admm_inner(
    coeffs: &FpCoefficients,
    gamma: &DMatrix<f64>,
    varpi: &DMatrix<f64>,
    zeta0: &DMatrix<f64>,
    config: &SystemConfig,
) -> Result<AdmmOutcome> {
    let radius2 = config.zeta_budget();
    let solver = ZetaSolver::new(coeffs, gamma, varpi, config.penalty)?;
    let mut q = project_rows(zeta0, radius2);
    let mut u = DMatrix::zeros(q.nrows(), q.ncols());
    let mut residual = f64::INFINITY;
    for t in 1..=config.max_admm_iters {
        let zeta = solver.solve(&q, &u);
        let q_next = project_rows(&(&zeta - &u), radius2);
        u += &q_next - &zeta;
        if zeta.iter().chain(q_next.iter()).chain(u.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!("non-finite ADMM iterate at step {t}")));
        }
        residual = relative(&zeta, &q_next, zeta.norm());
        let dual = relative(&q_next, &q, q_next.norm());
        q = q_next;
        if residual <= config.eps_admm && dual <= config.eps_admm {
            return Ok(AdmmOutcome {
                zeta: q,
                iterations: t,
                residual,
                hit_cap: false,
            });
        }
    }
    Ok(AdmmOutcome {
        zeta: q,
        iterations: config.max_admm_iters,
        residual,
        hit_cap: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    IterationCap,
    /// The ADMM output did not improve the quadratic-transform objective;
    /// the previous iterate is kept.
    NoAscent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpDiagnostics {
    /// `f1(zeta^(i), gamma*(zeta^(i)))` starting with the initializer.
    pub f1_history: Vec<f64>,
    pub admm_iterations: Vec<usize>,
    pub admm_residuals: Vec<f64>,
    pub admm_hit_cap: Vec<bool>,
    pub fp_iterations: usize,
    pub stop: StopReason,
}

impl FpDiagnostics {
    pub fn admm_iterations_total(&self) -> usize {
        self.admm_iterations.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct FpOutcome {
    pub allocation: PowerAllocation,
    pub diagnostics: FpDiagnostics,
}

/// ADMM-based fractional programming for sum-SE maximization, warm-started
/// from `eta0`.
pub fn admm_fp_optimize(
    est: &EstimationStatistics,
    chan: &ChannelStatistics,
    config: &SystemConfig,
    eta0: &PowerAllocation,
) -> Result<FpOutcome> {
    if !eta0.is_feasible(config) {
        return Err(Error::InvalidArgument(format!(
            "initial allocation exceeds the per-AP budget by {:e}",
            eta0.budget_excess(config)
        )));
    }
    let coeffs = build_fp_coefficients(chan, est, config);
    let mut zeta = eta0.zeta.clone();
    let mut gamma = update_gamma(&coeffs, &zeta);
    let mut f1 = evaluate_objective(&coeffs, &zeta, &gamma);
    let mut diag = FpDiagnostics {
        f1_history: vec![f1],
        admm_iterations: Vec::new(),
        admm_residuals: Vec::new(),
        admm_hit_cap: Vec::new(),
        fp_iterations: 0,
        stop: StopReason::IterationCap,
    };

    for _ in 0..config.max_fp_iters {
        let varpi = update_varpi(&coeffs, &zeta, &gamma);
        let inner = admm_inner(&coeffs, &gamma, &varpi, &zeta, config)?;
        diag.admm_iterations.push(inner.iterations);
        diag.admm_residuals.push(inner.residual);
        diag.admm_hit_cap.push(inner.hit_cap);
        diag.fp_iterations += 1;

        let before = evaluate_f2(&coeffs, &zeta, &gamma, &varpi);
        let after = evaluate_f2(&coeffs, &inner.zeta, &gamma, &varpi);
        if after < before {
            diag.stop = StopReason::NoAscent;
            diag.f1_history.push(f1);
            break;
        }
        zeta = inner.zeta;
        gamma = update_gamma(&coeffs, &zeta);
        let next = evaluate_objective(&coeffs, &zeta, &gamma);
        diag.f1_history.push(next);
        let delta = (next - f1).abs();
        f1 = next;
        let done = match config.fp_stop {
            FpStopRule::SquaredDelta => delta * delta <= config.eps_fp,
            FpStopRule::AbsDelta => delta <= config.eps_fp,
        };
        if done {
            diag.stop = StopReason::Converged;
            break;
        }
    }

    Ok(FpOutcome {
        allocation: PowerAllocation::from_zeta(zeta, &est.z),
        diagnostics: diag,
    })
}
