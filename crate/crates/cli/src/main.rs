use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use starcf_core::experiment::{figure_spec, run_experiment, validate_run, ExperimentSpec, Figure, ValidationSpec};
use starcf_core::SystemConfig;

/// Root seed used by figure presets when neither flag nor env var is set.
const DEFAULT_ROOT_SEED: u64 = 1;
const DEFAULT_TRIALS: usize = 20;

/// Exit status for a validation run with too few trials to judge.
const EXIT_INSUFFICIENT: u8 = 2;

#[derive(Parser)]
#[command(name = "starcf", version, about = "STAR-RIS cell-free massive MIMO downlink experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write `<id>.csv` plus `<id>.meta.json`.
    Run(RunArgs),
    /// Monte Carlo check of the closed-form moments on a small system.
    Validate(ValidateArgs),
    /// Print the resolved default configuration as JSON.
    PrintConfig,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON).
    #[arg(long, conflicts_with_all = ["figure", "full"], required_unless_present = "figure")]
    spec: Option<PathBuf>,
    /// Built-in figure preset.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    figure: Option<u8>,
    /// Output directory; overrides the spec's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed; overrides the spec's `root_seed`.
    #[arg(long, env = "STARCF_SEED")]
    seed: Option<u64>,
    /// Scenario seeds per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Extend the element sweep of figure 4 to L = 196.
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, env = "STARCF_SEED", default_value_t = 0)]
    seed: u64,
}

fn load_spec(args: &RunArgs) -> Result<ExperimentSpec> {
    let mut spec = match (&args.spec, args.figure) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(n)) => figure_spec(
            Figure::from_number(n)?,
            args.seed.unwrap_or(DEFAULT_ROOT_SEED),
            args.trials.unwrap_or(DEFAULT_TRIALS),
            args.full,
        ),
        (None, None) => bail!("one of --spec or --figure is required"),
    };
    if let Some(seed) = args.seed {
        spec.root_seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(out) = &args.out {
        spec.output_dir = Some(out.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let spec = load_spec(&args)?;
    let out = run_experiment(&spec)?;
    println!("rows {}", out.rows.len());
    println!("csv {}", out.csv_path.display());
    println!("metadata {}", out.metadata_path.display());
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let report = validate_run(&ValidationSpec::small(args.seed, args.trials))?;
    print!("{}", report.render());
    Ok(if report.insufficient {
        ExitCode::from(EXIT_INSUFFICIENT)
    } else if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate(args),
        Command::PrintConfig => serde_json::to_string_pretty(&SystemConfig::default())
            .map(|s| {
                println!("{s}");
                ExitCode::SUCCESS
            })
            .map_err(Into::into),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
