//! Seeded parameter sweeps with CSV output, plus the Monte Carlo moment
//! validation suite.
//!
//! Every sweep point reuses the same per-trial scenario seeds, so two points
//! differing only in the swept parameter see the same random drop stream.

mod presets;
mod validate;

pub use presets::{figure_spec, Figure};
pub use validate::{
    validate_run, CheckLine, ValidationReport, ValidationSpec, C_BAR_TOL, D_BAR_TOL, GAIN_TOL, MIN_TRIALS,
};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::power::{admm_fp_optimize, fractional_power_control, no_power_control, PowerAllocation};
use crate::rng::derive_seed;
use crate::se::closed_form_se;
use crate::system::{Surface, SystemModel};

/// Stream tag for per-trial scenario seeds.
const TRIAL_STREAM: u64 = 0x7472_6961_6c73;

/// Seed of scenario `trial` under `root`; independent of the sweep point.
pub fn trial_seed(root: u64, trial: usize) -> u64 {
    derive_seed(derive_seed(root, TRIAL_STREAM), trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    AdmmFp,
    Fractional { alpha: f64 },
    None,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::AdmmFp => "admm_fp",
            Algorithm::Fractional { .. } => "fractional",
            Algorithm::None => "none",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Algorithm::Fractional { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

/// One power-control policy on one surface type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub algorithm: Algorithm,
    #[serde(default = "default_surface")]
    pub surface: Surface,
}

fn default_surface() -> Surface {
    Surface::Star
}

impl Arm {
    pub fn star(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            surface: Surface::Star,
        }
    }

    /// CSV label: the algorithm name, suffixed `_cris` on the conventional
    /// surface.
    pub fn label(&self) -> String {
        match self.surface {
            Surface::Star => self.algorithm.name().to_string(),
            Surface::Conventional => format!("{}_cris", self.algorithm.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParameter {
    /// Number of APs.
    #[serde(rename = "M")]
    NumAps,
    #[serde(rename = "N_ap")]
    ApAntennas,
    #[serde(rename = "K")]
    NumUsers,
    #[serde(rename = "N_u")]
    UserAntennas,
    /// Total element count of a square surface.
    #[serde(rename = "L")]
    Elements,
    /// Element spacing in wavelengths.
    #[serde(rename = "d_spacing")]
    Spacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

fn as_count(parameter: SweepParameter, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!("{parameter:?} needs a positive integer, got {v}")))
    }
}

impl SweepParameter {
    pub fn apply(self, cfg: &mut SystemConfig, v: f64) -> Result<()> {
        match self {
            SweepParameter::NumAps => cfg.num_aps = as_count(self, v)?,
            SweepParameter::ApAntennas => cfg.ap_antennas = as_count(self, v)?,
            SweepParameter::NumUsers => {
                let nu = cfg.user_antennas;
                cfg.set_users(as_count(self, v)?, nu);
            }
            SweepParameter::UserAntennas => {
                let k = cfg.num_users;
                cfg.set_users(k, as_count(self, v)?);
            }
            SweepParameter::Elements => {
                let l = as_count(self, v)?;
                let side = (l as f64).sqrt().round() as usize;
                if side * side != l {
                    return Err(Error::InvalidArgument(format!("L = {l} is not a perfect square")));
                }
                cfg.set_square_surface(side);
            }
            SweepParameter::Spacing => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("spacing must be positive, got {v}")));
                }
                cfg.element_width = v * cfg.wavelength;
                cfg.element_height = v * cfg.wavelength;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment_id: String,
    /// `"2"`, `"3"`, `"4"` or `"custom"`.
    pub figure_id: String,
    pub root_seed: u64,
    /// Cartesian product, first sweep outermost.
    pub sweeps: Vec<Sweep>,
    pub base: SystemConfig,
    pub arms: Vec<Arm>,
    /// Scenario seeds per sweep point.
    pub trials: usize,
    /// Trials for the moment validation suite.
    pub mc_trials: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// One resolved sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub values: Vec<(SweepParameter, f64)>,
    pub config: SystemConfig,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.experiment_id.is_empty()
            || !self.experiment_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return bad(format!("experiment_id {:?} must be a non-empty file-safe name", self.experiment_id));
        }
        if !["2", "3", "4", "custom"].contains(&self.figure_id.as_str()) {
            return bad(format!("figure_id {:?} is not one of 2, 3, 4, custom", self.figure_id));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.arms.is_empty() {
            return bad("no algorithms to run".into());
        }
        for s in &self.sweeps {
            if s.values.is_empty() {
                return bad(format!("sweep over {:?} has no values", s.parameter));
            }
        }
        for arm in &self.arms {
            if let Some(a) = arm.algorithm.alpha() {
                if !(0.0..=1.0).contains(&a) {
                    return bad(format!("alpha = {a} outside [0, 1]"));
                }
            }
        }
        self.base.validate()?;
        for p in self.points()? {
            p.config.validate()?;
        }
        Ok(())
    }

    /// Sweep points in row-major order.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let mut points = vec![SweepPoint {
            values: Vec::new(),
            config: self.base.clone(),
        }];
        for sweep in &self.sweeps {
            let mut next = Vec::with_capacity(points.len() * sweep.values.len());
            for p in &points {
                for &v in &sweep.values {
                    let mut config = p.config.clone();
                    sweep.parameter.apply(&mut config, v)?;
                    let mut values = p.values.clone();
                    values.push((sweep.parameter, v));
                    next.push(SweepPoint { values, config });
                }
            }
            points = next;
        }
        Ok(points)
    }

    /// `|sweep points| * trials * |arms|`.
    pub fn expected_rows(&self) -> usize {
        let points: usize = self.sweeps.iter().map(|s| s.values.len()).product();
        points * self.trials * self.arms.len()
    }
}

/// One CSV line. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub figure_id: String,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N_ap")]
    pub n_ap: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "K_r")]
    pub k_r: usize,
    #[serde(rename = "K_t")]
    pub k_t: usize,
    #[serde(rename = "N_u")]
    pub n_u: usize,
    #[serde(rename = "L")]
    pub l: usize,
    /// Element spacing in wavelengths.
    pub d_spacing: f64,
    pub algorithm: String,
    pub alpha: Option<f64>,
    pub sum_se: f64,
    pub avg_se: f64,
    pub fp_iters: usize,
    pub admm_iters_total: usize,
    pub runtime_ms: f64,
}

pub const CSV_HEADER: [&str; 18] = [
    "experiment_id",
    "figure_id",
    "seed",
    "M",
    "N_ap",
    "K",
    "K_r",
    "K_t",
    "N_u",
    "L",
    "d_spacing",
    "algorithm",
    "alpha",
    "sum_se",
    "avg_se",
    "fp_iters",
    "admm_iters_total",
    "runtime_ms",
];

/// Result of one policy on one drop.
#[derive(Debug, Clone)]
pub struct ArmResult {
    pub allocation: PowerAllocation,
    pub sum_se: f64,
    pub avg_se: f64,
    pub fp_iters: usize,
    pub admm_iters_total: usize,
}

/// Runs `algorithm` on a built drop.
pub fn run_algorithm(model: &SystemModel, algorithm: Algorithm) -> Result<ArmResult> {
    let cfg = &model.config;
    let (allocation, fp_iters, admm_iters_total) = match algorithm {
        Algorithm::None => (no_power_control(&model.est, cfg), 0, 0),
        Algorithm::Fractional { alpha } => (fractional_power_control(&model.chan, &model.est, cfg, alpha)?, 0, 0),
        Algorithm::AdmmFp => {
            let init = no_power_control(&model.est, cfg);
            let out = admm_fp_optimize(&model.est, &model.chan, cfg, &init)?;
            let total = out.diagnostics.admm_iterations_total();
            (out.allocation, out.diagnostics.fp_iterations, total)
        }
    };
    let report = closed_form_se(&model.est, &model.chan, &allocation, cfg)?;
    Ok(ArmResult {
        allocation,
        sum_se: report.sum_se,
        avg_se: report.avg_se,
        fp_iters,
        admm_iters_total,
    })
}

fn run_job(spec: &ExperimentSpec, point: &SweepPoint, trial: usize) -> Result<Vec<ResultRow>> {
    let seed = trial_seed(spec.root_seed, trial);
    let cfg = &point.config;
    let mut star = None;
    let mut conventional = None;
    let mut rows = Vec::with_capacity(spec.arms.len());
    for arm in &spec.arms {
        let slot = match arm.surface {
            Surface::Star => &mut star,
            Surface::Conventional => &mut conventional,
        };
        if slot.is_none() {
            *slot = Some(SystemModel::build(cfg.clone(), seed, arm.surface)?);
        }
        let model = slot.as_ref().expect("model built above");
        let start = Instant::now();
        let out = run_algorithm(model, arm.algorithm)?;
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        rows.push(ResultRow {
            experiment_id: spec.experiment_id.clone(),
            figure_id: spec.figure_id.clone(),
            seed,
            m: cfg.num_aps,
            n_ap: cfg.ap_antennas,
            k: cfg.num_users,
            k_r: cfg.num_reflect_users,
            k_t: cfg.num_transmit_users,
            n_u: cfg.user_antennas,
            l: cfg.num_elements(),
            d_spacing: cfg.element_width / cfg.wavelength,
            algorithm: arm.label(),
            alpha: arm.algorithm.alpha(),
            sum_se: out.sum_se,
            avg_se: out.avg_se,
            fp_iters: out.fp_iters,
            admm_iters_total: out.admm_iters_total,
            runtime_ms,
        });
    }
    Ok(rows)
}

/// Computes every row in spec order. Jobs run in parallel.
pub fn compute_rows(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let points = spec.points()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let chunks: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(p, t)| run_job(spec, &points[p], t))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidArgument(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Sidecar document written next to the CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub experiment_id: String,
    pub code_version: String,
    pub rows: usize,
    pub trial_seeds: Vec<u64>,
    pub spec: ExperimentSpec,
    /// Fully resolved config of every sweep point, in row order.
    pub resolved_configs: Vec<SystemConfig>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub metadata_path: PathBuf,
    pub rows: Vec<ResultRow>,
}

/// Runs the sweep and writes `<id>.csv` and `<id>.meta.json` into
/// `spec.output_dir` (or the working directory).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutput> {
    let start = Instant::now();
    let rows = compute_rows(spec)?;
    debug_assert_eq!(rows.len(), spec.expected_rows());
    let dir = spec.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let csv_path = dir.join(format!("{}.csv", spec.experiment_id));
    let metadata_path = dir.join(format!("{}.meta.json", spec.experiment_id));
    write_csv(&rows, fs::File::create(&csv_path)?)?;
    let meta = RunMetadata {
        experiment_id: spec.experiment_id.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        rows: rows.len(),
        trial_seeds: (0..spec.trials).map(|t| trial_seed(spec.root_seed, t)).collect(),
        spec: spec.clone(),
        resolved_configs: spec.points()?.into_iter().map(|p| p.config).collect(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    fs::write(&metadata_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(RunOutput {
        csv_path,
        metadata_path,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentSpec {
        let mut base = SystemConfig::default();
        base.num_aps = 4;
        base.set_users(4, 2);
        ExperimentSpec {
            experiment_id: "tiny".into(),
            figure_id: "custom".into(),
            root_seed: 9,
            sweeps: vec![Sweep {
                parameter: SweepParameter::NumAps,
                values: vec![3.0, 4.0],
            }],
            base,
            arms: vec![
                Arm::star(Algorithm::None),
                Arm::star(Algorithm::Fractional { alpha: 0.5 }),
                Arm {
                    algorithm: Algorithm::None,
                    surface: Surface::Conventional,
                },
            ],
            trials: 2,
            mc_trials: 100,
            output_dir: None,
        }
    }

    #[test]
    fn row_count_and_order() {
        let spec = tiny();
        let rows = compute_rows(&spec).unwrap();
        assert_eq!(rows.len(), spec.expected_rows());
        assert_eq!(rows.len(), 12);
        let labels: Vec<_> = rows[..3].iter().map(|r| r.algorithm.as_str()).collect();
        assert_eq!(labels, ["none", "fractional", "none_cris"]);
        assert_eq!(rows[0].m, 3);
        assert_eq!(rows[6].m, 4);
        assert_eq!(rows[0].seed, rows[6].seed);
        assert_ne!(rows[0].seed, rows[3].seed);
        assert_eq!(rows[1].alpha, Some(0.5));
        assert_eq!(rows[0].alpha, None);
    }

    #[test]
    fn csv_header_is_fixed() {
        let rows = compute_rows(&tiny()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, CSV_HEADER.join(","));
        let second = text.lines().nth(1).unwrap();
        assert!(second.contains(",none,,"), "{second}");
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = tiny();
        s.trials = 0;
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.sweeps[0].values.clear();
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.sweeps[0].parameter = SweepParameter::Elements;
        s.sweeps[0].values = vec![20.0];
        assert!(s.validate().is_err());
        let mut s = tiny();
        s.experiment_id = "../x".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = tiny();
        assert_eq!(ExperimentSpec::from_json(&s.to_json().unwrap()).unwrap(), s);
    }
}
