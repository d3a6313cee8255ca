use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dqgo::calibration::{calibrate, calibrate_cached, GridSpec};
use dqgo::error::{Error, Result};
use dqgo::experiment::{emit_outputs, run_sp_experiment, run_time_sweep, ExperimentConfig};
use dqgo::ising::{read_instance, sample_sk_instance, write_instance};
use dqgo::qgo::{energy_landscape, QgoConfig};
use dqgo::rng::substream;
use dqgo::schedule::{build_trotter_circuit, export_openqasm, read_schedule};

#[derive(Parser)]
#[command(name = "dqgo", about = "Discretized quantum greedy optimization simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate (b_opt, c_opt) for a problem size on the reference ferromagnet.
    Calibrate {
        #[arg(long)]
        n: usize,
        /// Annealing time.
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        /// Trotter step.
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Cache directory; omitted means recompute.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Sample Sherrington-Kirkpatrick instances to JSON files.
    GenInstances {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a success-probability experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides output_dir in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an annealing-time sweep from a JSON config (T given as a list).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan the energy landscape along one counterdiabatic coefficient.
    Landscape {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        qubit: usize,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 41)]
        steps: usize,
        #[arg(long, default_value_t = 0.7)]
        b_opt: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// 0 means exact expectation values.
        #[arg(long, default_value_t = 0)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the Trotter circuit for an instance + schedule as OpenQASM 3.
    ExportQasm {
        #[arg(long)]
        instance: PathBuf,
        /// Schedule JSON file.
        #[arg(long)]
        schedule: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        source: e,
    })
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate { n, t, dt, cache_dir } => {
            let grid = GridSpec::default();
            let result = match cache_dir {
                Some(dir) => calibrate_cached(n, t, dt, &grid, &dir)?,
                None => calibrate(n, t, dt, &grid)?,
            };
            println!("{}", serde_json::to_string_pretty(&result).expect("serializes"));
        }
        Command::GenInstances { n, count, seed, out } => {
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
            for idx in 0..count {
                let mut rng = substream(seed, &[n as u64, idx as u64]);
                let instance = sample_sk_instance(n, &mut rng)?;
                let path = out.join(format!("sk_n{n}_seed{seed}_{idx:04}.json"));
                write_instance(&instance, &path)?;
                println!("{}", path.display());
            }
        }
        Command::Run { config, out } => {
            let mut config = load_config(&config)?;
            if out.is_some() {
                config.output_dir = out;
            }
            let report = run_sp_experiment(&config)?;
            if let Some(dir) = &config.output_dir {
                emit_outputs(&report, dir)?;
                println!("wrote results to {}", dir.display());
            }
            for cell in &report.cells {
                println!(
                    "{} n={} T={} delta_c={} shots={} sp={:.4}",
                    cell.algorithm, cell.n, cell.t, cell.delta_c, cell.shots, cell.sp
                );
            }
        }
        Command::Sweep { config, out } => {
            let mut config = load_config(&config)?;
            if out.is_some() {
                config.output_dir = out;
            }
            let report = run_time_sweep(&config)?;
            if let Some(dir) = &config.output_dir {
                emit_outputs(&report, dir)?;
                println!("wrote results to {}", dir.display());
            }
            for cell in &report.cells {
                println!(
                    "{} n={} T={} sp={:.4}",
                    cell.algorithm, cell.n, cell.t, cell.sp
                );
            }
        }
        Command::Landscape {
            instance,
            qubit,
            lo,
            hi,
            steps,
            b_opt,
            t,
            dt,
            shots,
            seed,
            out,
        } => {
            let instance = read_instance(&instance)?;
            let mut config = QgoConfig::new(1.0, 1.0, b_opt);
            config.t_total = t;
            config.dt = dt;
            config.shots = shots;
            config.seed = seed;
            let c = vec![0.0; instance.num_qubits()];
            let points = energy_landscape(&instance, &c, qubit, lo, hi, steps, &config)?;
            let mut text = String::from("c,energy\n");
            for (value, energy) in points {
                text.push_str(&format!("{value},{energy}\n"));
            }
            write_or_print(out.as_ref(), &text)?;
        }
        Command::ExportQasm { instance, schedule, out } => {
            let instance = read_instance(&instance)?;
            let sched = read_schedule(&schedule)?;
            let circuit = build_trotter_circuit(&instance, &sched)?;
            write_or_print(out.as_ref(), &export_openqasm(&circuit))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
