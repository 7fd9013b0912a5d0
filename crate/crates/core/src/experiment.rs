//! Experiment runner: executes the study designs from declarative configs,
//! aggregates error/variance metrics, and writes JSON traces plus CSV tables
//! whose columns match the figures they reproduce.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapt::noa_vqe;
use crate::ansatz;
use crate::encoding::jordan_wigner;
use crate::error::{Error, Result};
use crate::hamiltonian::{build_hubbard, HubbardSpec};
use crate::noization::{noization_loop, NoizationTrace};
use crate::oracle::{assemble_fermionic, exact_1rdm, exact_ground_state};
use crate::pauli::PauliSum;
use crate::seeding::derive_seed;
use crate::simulator::NoiseModel;
use crate::vqe::{run_vqe, ShotBudget, VqeResult};

/// Default noise-ratio grid for trade-off studies (log-spaced).
pub const DEFAULT_R_GRID: [f64; 5] = [0.01, 0.03, 0.1, 0.3, 1.0];

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vqe,
    Noization,
    NoaVqe,
}

fn default_r() -> f64 {
    1.0
}

/// Gate-noise switch: `r` scales the reference RB rates.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    #[serde(default = "default_r")]
    pub r: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            r: 1.0,
        }
    }
}

fn default_n_iter() -> usize {
    1000
}

fn default_n_repeats() -> usize {
    10
}

/// Shot accounting: `exact = true` simulates infinite shots.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotsConfig {
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub total: Option<u64>,
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    #[serde(default = "default_n_repeats")]
    pub n_repeats: usize,
}

impl Default for ShotsConfig {
    fn default() -> Self {
        Self {
            exact: true,
            total: None,
            n_iter: default_n_iter(),
            n_repeats: default_n_repeats(),
        }
    }
}

fn default_repeats() -> usize {
    1
}

/// One experiment: a model, a method, and the sampling plan.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: HubbardSpec,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ops: Option<usize>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub shots: ShotsConfig,
    pub seeds: Vec<u64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds: at least one seed required".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats: must be at least 1".into()));
        }
        match self.method {
            Method::Vqe => {
                if self.ansatz.is_none() {
                    return Err(Error::Config("ansatz: required for method vqe".into()));
                }
                if self.k.is_some() {
                    return Err(Error::Config("k: only valid for noizing methods".into()));
                }
                if self.max_ops.is_some() {
                    return Err(Error::Config("max_ops: only valid for noa-vqe".into()));
                }
            }
            Method::Noization => {
                if self.ansatz.is_none() {
                    return Err(Error::Config(
                        "ansatz: required for method noization".into(),
                    ));
                }
                if self.k.is_none() {
                    return Err(Error::Config("k: required for method noization".into()));
                }
                if self.max_ops.is_some() {
                    return Err(Error::Config("max_ops: only valid for noa-vqe".into()));
                }
            }
            Method::NoaVqe => {
                if self.ansatz.is_some() {
                    return Err(Error::Config(
                        "ansatz: noa-vqe builds its reference circuit itself".into(),
                    ));
                }
                if self.k.is_none() {
                    return Err(Error::Config("k: required for method noa-vqe".into()));
                }
            }
        }
        if !self.shots.exact && self.shots.total.is_none() {
            return Err(Error::Config(
                "shots.total: required unless shots.exact".into(),
            ));
        }
        if self.noise.r < 0.0 {
            return Err(Error::Config("noise.r: must be non-negative".into()));
        }
        Ok(())
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        if !self.noise.enabled || self.noise.r == 0.0 {
            Ok(NoiseModel::off())
        } else {
            NoiseModel::reference_scaled(self.noise.r)
        }
    }

    pub fn budget(&self) -> ShotBudget {
        let k_steps = match self.method {
            Method::Vqe => 1,
            Method::Noization | Method::NoaVqe => self.k.unwrap_or(1),
        };
        if self.shots.exact {
            ShotBudget::exact(self.shots.n_iter, self.shots.n_repeats)
        } else {
            ShotBudget::sampled(
                self.shots.total.unwrap_or(0),
                self.shots.n_iter,
                self.shots.n_repeats,
                k_steps,
            )
        }
    }

    /// Shifts every base seed, for CI sharding.
    pub fn with_seed_offset(mut self, offset: u64) -> Self {
        for s in &mut self.seeds {
            *s = s.wrapping_add(offset);
        }
        self
    }
}

/// Error/variance aggregation over whole-procedure repeats.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Exact ground energy used as the reference, recomputed at run start.
    pub e0: f64,
    /// Mean relative bias `<|E - E0| / |E0|>`.
    pub err: f64,
    /// Relative variance `<((E - <E>) / E0)^2>`.
    pub var: f64,
    /// `sqrt(err^2 + var)`.
    pub merit: f64,
    pub energies: Vec<f64>,
}

impl MetricsReport {
    pub fn from_energies(e0: f64, energies: &[f64]) -> Self {
        let n = energies.len() as f64;
        let err = energies.iter().map(|e| (e - e0).abs() / e0.abs()).sum::<f64>() / n;
        let mean = energies.iter().sum::<f64>() / n;
        let var = energies
            .iter()
            .map(|e| ((e - mean) / e0).powi(2))
            .sum::<f64>()
            / n;
        MetricsReport {
            e0,
            err,
            var,
            merit: (err * err + var).sqrt(),
            energies: energies.to_vec(),
        }
    }
}

/// One executed run's outputs, kept for artifact writing.
#[derive(Serialize)]
struct RunArtifact<'a> {
    seed: u64,
    repeat: usize,
    energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: &'a Option<NoizationTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vqe: &'a Option<VqeResult>,
}

struct RunOutput {
    seed: u64,
    repeat: usize,
    energy: f64,
    trace: Option<NoizationTrace>,
    vqe: Option<VqeResult>,
}

fn execute_one(cfg: &ExperimentConfig, seed: u64, repeat: usize) -> Result<RunOutput> {
    let h0 = build_hubbard(&cfg.model)?;
    let noise = cfg.noise_model()?;
    let budget = cfg.budget();
    let run_seed = derive_seed(seed, repeat as u64);
    match cfg.method {
        Method::Vqe => {
            let obs = jordan_wigner(&h0)?;
            let tpl = ansatz::by_name(cfg.ansatz.as_deref().unwrap(), h0.m)?;
            let result = run_vqe(&obs, &tpl, &budget, &noise, run_seed)?;
            Ok(RunOutput {
                seed,
                repeat,
                energy: result.best_energy,
                trace: None,
                vqe: Some(result),
            })
        }
        Method::Noization => {
            let tpl = ansatz::by_name(cfg.ansatz.as_deref().unwrap(), h0.m)?;
            let trace = noization_loop(&h0, &tpl, cfg.k.unwrap(), &budget, &noise, run_seed)?;
            let energy = trace
                .final_energy()
                .ok_or_else(|| Error::Config("empty noization trace".into()))?;
            Ok(RunOutput {
                seed,
                repeat,
                energy,
                trace: Some(trace),
                vqe: None,
            })
        }
        Method::NoaVqe => {
            let trace = noa_vqe(
                &h0,
                cfg.k.unwrap(),
                cfg.max_ops.unwrap_or(10),
                &budget,
                &noise,
                run_seed,
            )?;
            let energy = trace
                .final_energy()
                .ok_or_else(|| Error::Config("empty noa trace".into()))?;
            Ok(RunOutput {
                seed,
                repeat,
                energy,
                trace: Some(trace),
                vqe: None,
            })
        }
    }
}

/// Reference energy from the exact-diagonalization oracle.
pub fn reference_energy(model: &HubbardSpec) -> Result<f64> {
    let h = build_hubbard(model)?;
    let op = assemble_fermionic(&h)?;
    Ok(exact_ground_state(&op, None)?.0)
}

fn write_csv(path: &Path, schema: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# schema: {schema}")?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

/// Executes a config: one run per (seed, repeat), in parallel, then writes
/// the JSON report, per-run traces, and the CSV tables under
/// `out_dir/<name>/`. Returns the aggregated metrics.
pub fn run_experiment(cfg: &ExperimentConfig, name: &str, out_dir: &Path) -> Result<MetricsReport> {
    cfg.validate()?;
    let e0 = reference_energy(&cfg.model)?;

    let jobs: Vec<(u64, usize)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| (0..cfg.repeats).map(move |r| (s, r)))
        .collect();
    let outputs: Vec<Result<RunOutput>> = jobs
        .par_iter()
        .map(|&(seed, rep)| execute_one(cfg, seed, rep))
        .collect();
    let mut runs = Vec::with_capacity(outputs.len());
    for out in outputs {
        runs.push(out?);
    }

    let energies: Vec<f64> = runs.iter().map(|r| r.energy).collect();
    let report = MetricsReport::from_energies(e0, &energies);

    let dir = out_dir.join(name);
    fs::create_dir_all(&dir)?;

    #[derive(Serialize)]
    struct FullReport<'a> {
        config: &'a ExperimentConfig,
        metrics: &'a MetricsReport,
    }
    let report_json = serde_json::to_string_pretty(&FullReport {
        config: cfg,
        metrics: &report,
    })?;
    fs::write(dir.join("report.json"), report_json)?;

    let mut energy_rows = Vec::new();
    let mut norm_rows = Vec::new();
    let mut weight_rows = Vec::new();
    let mut orbital_rows = Vec::new();
    for run in &runs {
        let artifact = RunArtifact {
            seed: run.seed,
            repeat: run.repeat,
            energy: run.energy,
            trace: &run.trace,
            vqe: &run.vqe,
        };
        fs::write(
            dir.join(format!("run_s{}_r{}.json", run.seed, run.repeat)),
            serde_json::to_string_pretty(&artifact)?,
        )?;
        if let Some(trace) = &run.trace {
            norm_rows.push(format!(
                "0,{},{},{},{}",
                run.seed, run.repeat, trace.initial_one_norm, trace.initial_term_count
            ));
            for (rank, w) in trace.initial_weights.iter().enumerate() {
                weight_rows.push(format!("0,{},{},{rank},{w}", run.seed, run.repeat));
            }
            for (i, step) in trace.steps.iter().enumerate() {
                let k = i + 1;
                energy_rows.push(format!("{k},{},{},{}", run.seed, run.repeat, step.energy));
                for (rank, w) in step.weights.iter().enumerate() {
                    weight_rows.push(format!("{k},{},{},{rank},{w}", run.seed, run.repeat));
                }
                norm_rows.push(format!(
                    "{k},{},{},{},{}",
                    run.seed, run.repeat, step.one_norm, step.term_count
                ));
                for (mode, row) in step.cumulative_rotation.iter().enumerate() {
                    for (orbital, (re, im)) in row.iter().enumerate() {
                        orbital_rows.push(format!(
                            "{k},{},{},{orbital},{mode},{re},{im}",
                            run.seed, run.repeat
                        ));
                    }
                }
            }
        } else {
            energy_rows.push(format!("0,{},{},{}", run.seed, run.repeat, run.energy));
        }
    }

    write_csv(
        &dir.join("energy_vs_step.csv"),
        "energy_vs_step/1",
        "step,seed,repeat,energy",
        &energy_rows,
    )?;
    write_csv(
        &dir.join("one_norm_vs_step.csv"),
        "one_norm_vs_step/1",
        "step,seed,repeat,one_norm,terms",
        &norm_rows,
    )?;
    if !weight_rows.is_empty() {
        write_csv(
            &dir.join("weight_distribution.csv"),
            "weight_distribution/1",
            "step,seed,repeat,rank,magnitude",
            &weight_rows,
        )?;
    }
    if !orbital_rows.is_empty() {
        write_csv(
            &dir.join("orbitals.csv"),
            "orbitals/1",
            "step,seed,repeat,orbital,mode,re,im",
            &orbital_rows,
        )?;
    }
    Ok(report)
}

/// One row of a trade-off comparison.
#[derive(Clone, Debug, Serialize)]
pub struct TradeoffRow {
    pub r: f64,
    pub err_a: f64,
    pub var_a: f64,
    pub merit_a: f64,
    pub err_b: f64,
    pub var_b: f64,
    pub merit_b: f64,
}

/// Runs both configs over the noise-ratio grid and tabulates the merit
/// figures side by side (columns mirror the gate-noise/shot-noise study).
pub fn compare_tradeoff(
    cfg_a: &ExperimentConfig,
    cfg_b: &ExperimentConfig,
    grid: &[f64],
    out_dir: &Path,
) -> Result<Vec<TradeoffRow>> {
    cfg_a.validate()?;
    cfg_b.validate()?;
    if cfg_a.model != cfg_b.model {
        return Err(Error::Config(
            "compared experiments must share the same model".into(),
        ));
    }
    let e0 = reference_energy(&cfg_a.model)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &r in grid {
        let run_at = |cfg: &ExperimentConfig| -> Result<MetricsReport> {
            let mut cfg = cfg.clone();
            cfg.noise = NoiseConfig {
                enabled: r > 0.0,
                r,
            };
            let jobs: Vec<(u64, usize)> = cfg
                .seeds
                .iter()
                .flat_map(|&s| (0..cfg.repeats).map(move |rep| (s, rep)))
                .collect();
            let outputs: Vec<Result<RunOutput>> = jobs
                .par_iter()
                .map(|&(seed, rep)| execute_one(&cfg, seed, rep))
                .collect();
            let mut energies = Vec::new();
            for out in outputs {
                energies.push(out?.energy);
            }
            Ok(MetricsReport::from_energies(e0, &energies))
        };
        let a = run_at(cfg_a)?;
        let b = run_at(cfg_b)?;
        rows.push(TradeoffRow {
            r,
            err_a: a.err,
            var_a: a.var,
            merit_a: a.merit,
            err_b: b.err,
            var_b: b.var,
            merit_b: b.merit,
        });
    }
    fs::create_dir_all(out_dir)?;
    let csv_rows: Vec<String> = rows
        .iter()
        .map(|t| {
            format!(
                "{},{},{},{},{},{},{}",
                t.r, t.err_a, t.var_a, t.merit_a, t.err_b, t.var_b, t.merit_b
            )
        })
        .collect();
    write_csv(
        &out_dir.join("tradeoff.csv"),
        "tradeoff/1",
        "r,err_a,var_a,merit_a,err_b,var_b,merit_b",
        &csv_rows,
    )?;
    Ok(rows)
}

/// Exact-diagonalization summary for a model: ground energy and NOONs.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub m: usize,
    pub ground_energy: f64,
    pub noons: Vec<f64>,
}

pub fn oracle_report(model: &HubbardSpec) -> Result<OracleReport> {
    let h = build_hubbard(model)?;
    let op = assemble_fermionic(&h)?;
    let (e0, gs) = exact_ground_state(&op, None)?;
    let rdm = exact_1rdm(&gs, h.m);
    let (_, noons) = crate::noization::natural_orbital_transform(&rdm);
    Ok(OracleReport {
        m: h.m,
        ground_energy: e0,
        noons,
    })
}

/// The encoded observable for a model, for CLI dumps.
pub fn hamiltonian_dump(model: &HubbardSpec) -> Result<PauliSum> {
    let h = build_hubbard(model)?;
    jordan_wigner(&h)
}
