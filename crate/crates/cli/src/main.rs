//! Experiment runner CLI. Configs are JSON files; see `experiments/` in the
//! repository root for the study designs shipped with the project.
//!
//! The output directory defaults to `./out` and can be overridden with the
//! `NOVQE_OUT_DIR` environment variable.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use novqe::experiment::{
    compare_tradeoff, hamiltonian_dump, oracle_report, run_experiment, ExperimentConfig,
    DEFAULT_R_GRID,
};
use novqe::hamiltonian::HubbardSpec;

#[derive(Parser)]
#[command(name = "novqe", about = "Natural-orbitalizing VQE experiment runner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its artifacts.
    Run {
        /// Path to the experiment config (JSON).
        config: PathBuf,
        /// Added to every base seed, for CI sharding.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Run two configs over the noise-ratio grid and tabulate their merits.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Comma-separated noise ratios (defaults to the log-spaced grid).
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Print the exact-diagonalization energy and NOONs for a model.
    Oracle {
        /// Path to a model config (JSON HubbardSpec, or any experiment
        /// config with a `model` field).
        model: PathBuf,
    },
    /// Print the encoded Pauli observable for a model.
    DumpHamiltonian {
        model: PathBuf,
    },
}

fn out_dir() -> PathBuf {
    std::env::var_os("NOVQE_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    cfg.validate()
        .with_context(|| format!("validating config {}", path.display()))?;
    Ok(cfg)
}

fn load_model(path: &Path) -> Result<HubbardSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model config {}", path.display()))?;
    // Accept either a bare HubbardSpec or a full experiment config.
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let spec_value = value.get("model").cloned().unwrap_or(value);
    let spec: HubbardSpec = serde_json::from_value(spec_value)
        .with_context(|| format!("parsing model from {}", path.display()))?;
    spec.validate()?;
    Ok(spec)
}

fn run_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed_offset,
        } => {
            let cfg = load_experiment(&config)?.with_seed_offset(seed_offset);
            let name = run_name(&config);
            let dir = out_dir();
            let report = run_experiment(&cfg, &name, &dir)?;
            println!("experiment: {name}");
            println!("reference E0 = {:.10}", report.e0);
            println!(
                "runs = {}  err = {:.6e}  var = {:.6e}  merit = {:.6e}",
                report.energies.len(),
                report.err,
                report.var,
                report.merit
            );
            println!("artifacts under {}", dir.join(&name).display());
        }
        Command::Compare {
            config_a,
            config_b,
            seed_offset,
            grid,
        } => {
            let cfg_a = load_experiment(&config_a)?.with_seed_offset(seed_offset);
            let cfg_b = load_experiment(&config_b)?.with_seed_offset(seed_offset);
            let grid = grid.unwrap_or_else(|| DEFAULT_R_GRID.to_vec());
            let name = format!("{}_vs_{}", run_name(&config_a), run_name(&config_b));
            let dir = out_dir().join(name);
            let rows = compare_tradeoff(&cfg_a, &cfg_b, &grid, &dir)?;
            println!(
                "{:>8}  {:>12} {:>12}  {:>12} {:>12}",
                "r", "merit_a", "err_a", "merit_b", "err_b"
            );
            for row in &rows {
                println!(
                    "{:>8.3}  {:>12.5e} {:>12.5e}  {:>12.5e} {:>12.5e}",
                    row.r, row.merit_a, row.err_a, row.merit_b, row.err_b
                );
            }
            println!("table written to {}", dir.join("tradeoff.csv").display());
        }
        Command::Oracle { model } => {
            let spec = load_model(&model)?;
            let report = oracle_report(&spec)?;
            println!("spin-orbitals: {}", report.m);
            println!("ground energy: {:.10}", report.ground_energy);
            let noons: Vec<String> = report.noons.iter().map(|n| format!("{n:.6}")).collect();
            println!("NOONs: [{}]", noons.join(", "));
        }
        Command::DumpHamiltonian { model } => {
            let spec = load_model(&model)?;
            let obs = hamiltonian_dump(&spec)?;
            println!("{}", serde_json::to_string_pretty(&obs)?);
            eprintln!(
                "terms: {}  one-norm: {:.6}  offset: {:.6}",
                obs.len(),
                obs.one_norm(),
                obs.offset()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
