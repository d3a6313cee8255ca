//! Batch success-probability experiments: instance generation, per-cell
//! aggregation over (algorithm, n, T, delta_c, shots), persistence, and
//! plot-ready output.
//!
//! Instance sets are derived from (master_seed, n, index) only, so every
//! arm of a comparison sees the same instances; measurement noise streams
//! additionally hash in the cell parameters.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate, calibrate_cached, CalibrationResult, GridSpec};
use crate::error::{Error, Result};
use crate::ising::{brute_force_ground_state, sample_sk_instance};
use crate::qgo::{daqc_run, qgo_run, Engine, QgoConfig};
use crate::rng::{substream, substream_seed};

const INSTANCE_STREAM: u64 = 0x1457;
const NOISE_STREAM: u64 = 0x401e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "d-qgo")]
    DQgo,
    #[serde(rename = "v-qgo")]
    VQgo,
    #[serde(rename = "d-aqc")]
    DAqc,
}

impl Algorithm {
    fn tag(self) -> u64 {
        match self {
            Algorithm::DQgo => 0,
            Algorithm::VQgo => 1,
            Algorithm::DAqc => 2,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::DQgo => "d-qgo",
            Algorithm::VQgo => "v-qgo",
            Algorithm::DAqc => "d-aqc",
        })
    }
}

/// A single annealing time or a sweep list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Single(f64),
    Sweep(Vec<f64>),
}

impl TimeSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TimeSpec::Single(t) => vec![*t],
            TimeSpec::Sweep(ts) => ts.clone(),
        }
    }
}

/// Finite-difference interval: a fixed value or "c_opt" (resolved per size
/// from calibration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaC {
    Label(String),
    Fixed(f64),
}

impl Default for DeltaC {
    fn default() -> Self {
        DeltaC::Label("c_opt".to_string())
    }
}

impl DeltaC {
    fn resolve(&self, c_opt: f64) -> Result<f64> {
        match self {
            DeltaC::Fixed(v) if *v > 0.0 => Ok(*v),
            DeltaC::Fixed(v) => Err(Error::invalid(format!("delta_c must be positive, got {v}"))),
            DeltaC::Label(s) if s == "c_opt" => Ok(c_opt),
            DeltaC::Label(s) => Err(Error::invalid(format!("unknown delta_c label {s:?}"))),
        }
    }
}

fn default_dt() -> f64 {
    0.1
}

fn default_instances() -> usize {
    100
}

fn default_ode_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub sizes: Vec<usize>,
    #[serde(rename = "T")]
    pub t: TimeSpec,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub delta_c: DeltaC,
    #[serde(default)]
    pub shots: usize,
    #[serde(default = "default_instances")]
    pub instances: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Integrator step for v-QGO runs.
    #[serde(default = "default_ode_dt")]
    pub ode_dt: f64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.instances < 1 {
            return Err(Error::invalid("instances must be at least 1"));
        }
        if self.sizes.is_empty() {
            return Err(Error::invalid("sizes must be non-empty"));
        }
        for &n in &self.sizes {
            if n > crate::ising::MAX_QUBITS {
                return Err(Error::capacity(format!(
                    "size {n} exceeds the {}-qubit cap",
                    crate::ising::MAX_QUBITS
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub seed: u64,
    pub ground_energy: f64,
    pub degeneracy: usize,
    /// Basis index of the returned configuration (sgn(c) for the greedy
    /// algorithms, the modal state for the no-CD baseline).
    pub returned_basis: usize,
    /// Whether the returned configuration lies in the ground set.
    pub success: bool,
    /// Ground-set probability mass of the final state (no-CD baseline only).
    pub ground_probability: Option<f64>,
    pub shots_consumed: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpCell {
    pub algorithm: Algorithm,
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub delta_c: f64,
    pub shots: usize,
    pub instances: usize,
    /// Instances whose returned configuration is in the ground set.
    pub successes: usize,
    /// For the greedy algorithms: successes / instances. For the no-CD
    /// baseline: mean ground-set probability mass, the quantity its curves
    /// are drawn from.
    pub sp: f64,
    pub b_opt: f64,
    pub c_opt: f64,
    pub records: Vec<InstanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpReport {
    pub config: ExperimentConfig,
    pub calibrations: Vec<CalibrationResult>,
    pub cells: Vec<SpCell>,
}

/// Equality ignoring wall-clock fields; used by determinism checks.
pub fn reports_equivalent(a: &SpReport, b: &SpReport) -> bool {
    if a.config != b.config || a.calibrations != b.calibrations || a.cells.len() != b.cells.len() {
        return false;
    }
    a.cells.iter().zip(&b.cells).all(|(x, y)| {
        let strip = |c: &SpCell| {
            let mut c = c.clone();
            for r in &mut c.records {
                r.wall_ms = 0.0;
            }
            c
        };
        strip(x) == strip(y)
    })
}

pub fn instance_seed(master_seed: u64, n: usize, index: usize) -> u64 {
    substream_seed(master_seed, &[INSTANCE_STREAM, n as u64, index as u64])
}

fn noise_seed(config: &ExperimentConfig, n: usize, t: f64, delta_c: f64, index: usize) -> u64 {
    substream_seed(
        config.master_seed,
        &[
            NOISE_STREAM,
            config.algorithm.tag(),
            n as u64,
            t.to_bits(),
            delta_c.to_bits(),
            config.shots as u64,
            index as u64,
        ],
    )
}

fn cell_state_path(dir: &Path, config: &ExperimentConfig, n: usize, t: f64, delta_c: f64) -> PathBuf {
    // v-QGO results depend on the integrator step, so it is part of the key.
    let engine = match config.algorithm {
        Algorithm::VQgo => format!("_ode{}", config.ode_dt),
        _ => String::new(),
    };
    dir.join(format!(
        "cell_{}_n{}_T{}_dt{}_dc{}_s{}_m{}{}.jsonl",
        config.algorithm, n, t, config.dt, delta_c, config.shots, config.master_seed, engine
    ))
}

fn load_cell_state(path: &Path) -> Vec<InstanceRecord> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return Vec::new();
    };
    text.lines()
        .filter_map(|line| serde_json::from_str(line).ok())
        .collect()
}

fn run_instance(
    config: &ExperimentConfig,
    n: usize,
    t: f64,
    delta_c: f64,
    cal: &CalibrationResult,
    index: usize,
) -> Result<InstanceRecord> {
    let seed = instance_seed(config.master_seed, n, index);
    let mut rng = substream(seed, &[]);
    let mut instance = sample_sk_instance(n, &mut rng)?;
    instance.seed = Some(seed);
    let ground = brute_force_ground_state(&instance)?;

    let qgo_config = QgoConfig {
        delta_c,
        c_opt: cal.c_opt,
        b_opt: cal.b_opt,
        t_total: t,
        dt: config.dt,
        shots: config.shots,
        engine: match config.algorithm {
            Algorithm::VQgo => Engine::Ode,
            _ => Engine::Trotter,
        },
        seed: noise_seed(config, n, t, delta_c, index),
        ode_dt: config.ode_dt,
        common_random_numbers: false,
    };

    let start = Instant::now();
    let record = match config.algorithm {
        Algorithm::DQgo | Algorithm::VQgo => {
            let result = qgo_run(&instance, &qgo_config)?;
            let returned = result.signs.to_basis_index();
            InstanceRecord {
                index,
                seed,
                ground_energy: ground.energy,
                degeneracy: ground.degeneracy,
                returned_basis: returned,
                success: ground.contains(returned),
                ground_probability: None,
                shots_consumed: result.total_shots,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        }
        Algorithm::DAqc => {
            let outcome = daqc_run(&instance, &qgo_config)?;
            InstanceRecord {
                index,
                seed,
                ground_energy: ground.energy,
                degeneracy: ground.degeneracy,
                returned_basis: outcome.modal_config.to_basis_index(),
                success: outcome.success,
                ground_probability: Some(outcome.ground_probability),
                shots_consumed: outcome.shots_used,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        }
    };
    Ok(record)
}

/// Runs the full (sizes x T) grid for the configured algorithm.
///
/// When `config.output_dir` is set, per-instance records are persisted as
/// they complete and picked up again on restart.
pub fn run_sp_experiment(config: &ExperimentConfig) -> Result<SpReport> {
    config.validate()?;
    let mut calibrations = Vec::new();
    let mut cells = Vec::new();
    for &n in &config.sizes {
        let cal = calibration_for(config, n)?;
        for t in config.t.values() {
            let delta_c = config.delta_c.resolve(cal.c_opt)?;
            cells.push(run_cell(config, n, t, delta_c, &cal)?);
        }
        calibrations.push(cal);
    }
    Ok(SpReport {
        config: config.clone(),
        calibrations,
        cells,
    })
}

fn calibration_for(config: &ExperimentConfig, n: usize) -> Result<CalibrationResult> {
    let grid = GridSpec::default();
    // Calibration is always done at T = 1 per size; time sweeps reuse it.
    match &config.output_dir {
        Some(dir) => calibrate_cached(n, 1.0, config.dt, &grid, &dir.join("calibration")),
        None => calibrate(n, 1.0, config.dt, &grid),
    }
}

fn run_cell(
    config: &ExperimentConfig,
    n: usize,
    t: f64,
    delta_c: f64,
    cal: &CalibrationResult,
) -> Result<SpCell> {
    let state_path = config
        .output_dir
        .as_ref()
        .map(|dir| cell_state_path(dir, config, n, t, delta_c));
    let mut records: Vec<InstanceRecord> = Vec::with_capacity(config.instances);
    if let Some(path) = &state_path {
        records = load_cell_state(path);
        records.retain(|r| r.index < config.instances);
    }
    let mut state_file = match &state_path {
        Some(path) => {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| Error::io(parent.display().to_string(), e))?;
            }
            Some(
                std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?,
            )
        }
        None => None,
    };
    for index in 0..config.instances {
        if records.iter().any(|r| r.index == index) {
            continue;
        }
        let record = run_instance(config, n, t, delta_c, cal, index)?;
        if let Some(file) = &mut state_file {
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(file, "{line}").map_err(|e| Error::io("cell state", e))?;
        }
        records.push(record);
    }
    records.sort_by_key(|r| r.index);
    let successes = records.iter().filter(|r| r.success).count();
    let sp = match config.algorithm {
        Algorithm::DAqc => {
            records
                .iter()
                .map(|r| r.ground_probability.unwrap_or(0.0))
                .sum::<f64>()
                / records.len() as f64
        }
        _ => successes as f64 / records.len() as f64,
    };
    Ok(SpCell {
        algorithm: config.algorithm,
        n,
        t,
        delta_c,
        shots: config.shots,
        instances: records.len(),
        successes,
        sp,
        b_opt: cal.b_opt,
        c_opt: cal.c_opt,
        records,
    })
}

/// Runs the same instance set under delta_c = 0.1 and delta_c = c_opt and
/// reports both arms with their per-cell SP differences.
pub fn run_delta_c_comparison(config: &ExperimentConfig) -> Result<(SpReport, SpReport, Vec<f64>)> {
    run_delta_c_comparison_arms(config, DeltaC::Fixed(0.1), DeltaC::default())
}

/// [`run_delta_c_comparison`] with explicit intervals for each arm.
pub fn run_delta_c_comparison_arms(
    config: &ExperimentConfig,
    first: DeltaC,
    second: DeltaC,
) -> Result<(SpReport, SpReport, Vec<f64>)> {
    let mut small = config.clone();
    small.delta_c = first;
    let mut large = config.clone();
    large.delta_c = second;
    let report_small = run_sp_experiment(&small)?;
    let report_large = run_sp_experiment(&large)?;
    let diffs = report_small
        .cells
        .iter()
        .zip(&report_large.cells)
        .map(|(a, b)| a.sp - b.sp)
        .collect();
    Ok((report_small, report_large, diffs))
}

/// Sweeps the annealing time list in `config.t` holding dt fixed, so the
/// Trotter number scales with T.
pub fn run_time_sweep(config: &ExperimentConfig) -> Result<SpReport> {
    run_sp_experiment(config)
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes results.csv, details.csv, plot_sp.csv, and manifest.json.
pub fn emit_outputs(report: &SpReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let write = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))
    };

    let mut results = String::from("algorithm,n,T,delta_c,shots,instances,successes,sp\n");
    let mut plot = String::from("algorithm,n,T,delta_c,shots,sp\n");
    for cell in &report.cells {
        results.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            cell.algorithm,
            cell.n,
            fmt_f64(cell.t),
            fmt_f64(cell.delta_c),
            cell.shots,
            cell.instances,
            cell.successes,
            fmt_f64(cell.sp)
        ));
        plot.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cell.algorithm,
            cell.n,
            fmt_f64(cell.t),
            fmt_f64(cell.delta_c),
            cell.shots,
            fmt_f64(cell.sp)
        ));
    }
    write("results.csv", results)?;
    write("plot_sp.csv", plot)?;

    let mut details = String::from(
        "algorithm,n,T,delta_c,shots,instance,seed,ground_energy,degeneracy,returned,success,ground_probability,shots_consumed,wall_ms\n",
    );
    for cell in &report.cells {
        for r in &cell.records {
            details.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                cell.algorithm,
                cell.n,
                fmt_f64(cell.t),
                fmt_f64(cell.delta_c),
                cell.shots,
                r.index,
                r.seed,
                fmt_f64(r.ground_energy),
                r.degeneracy,
                r.returned_basis,
                r.success,
                r.ground_probability.map(fmt_f64).unwrap_or_default(),
                r.shots_consumed,
                fmt_f64(r.wall_ms)
            ));
        }
    }
    write("details.csv", details)?;

    #[derive(Serialize)]
    struct Manifest<'a> {
        version: &'a str,
        config: &'a ExperimentConfig,
        calibrations: &'a [CalibrationResult],
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: &report.config,
        calibrations: &report.calibrations,
    };
    write(
        "manifest.json",
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(())
}
