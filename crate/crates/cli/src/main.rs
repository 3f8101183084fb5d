//! `rfiqkd`: analytic sweeps, zero-rate thresholds, Monte Carlo sessions
//! and re-estimation of archived tallies.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error,
//! 3 success with warnings (rows lacking statistics).

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rfiqkd::par::{set_worker_count, Execution};
use rfiqkd::polarization::BasisAxis;
use rfiqkd::rates::{threshold_table, ProtocolKind};
use rfiqkd::sim::{estimate, EstimateReport, SessionTally};
use rfiqkd::sweep::{emit, format_real, run_sweep, MonteCarloSpec, SweepMode, SweepSpec};
use rfiqkd::sim::{DetectorConfig, SourceConfig};

/// Environment variable fixing the number of worker threads.
const WORKERS_ENV: &str = "RFIQKD_WORKERS";

#[derive(Parser)]
#[command(name = "rfiqkd", version, about = "QKD key rates under polarization frame rotation and fluctuation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file (analytic or Monte Carlo).
    Sweep { config: PathBuf },
    /// Print zero-rate thresholds for BB84 (XY, XZ) and six-state.
    Thresholds {
        /// Depolarizing probability p.
        #[arg(long)]
        noise: f64,
    },
    /// Run the config's grid as Monte Carlo sessions and archive the tallies.
    Mc { config: PathBuf },
    /// Re-estimate QBERs, C and key rates from an archived tally.
    Estimate {
        tally: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Config(m) => {
                eprintln!("configuration error: {m}");
                ExitCode::from(1)
            }
            Failure::Runtime(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Err(f) = configure_workers() {
        return f.exit();
    }
    let result = match cli.command {
        Command::Sweep { config } => sweep(&config, false),
        Command::Mc { config } => sweep(&config, true),
        Command::Thresholds { noise } => thresholds(noise),
        Command::Estimate { tally, json } => estimate_file(&tally, json),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(3),
        Err(f) => f.exit(),
    }
}

fn configure_workers() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{WORKERS_ENV}='{raw}' is not a positive integer")))?;
    set_worker_count(n).map_err(Failure::Runtime)
}

fn tally_path(spec: &SweepSpec, index: usize) -> PathBuf {
    let out = &spec.output.path;
    let dir = spec
        .output
        .tally_dir
        .clone()
        .unwrap_or_else(|| out.parent().map(Path::to_path_buf).unwrap_or_default());
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    dir.join(format!("{stem}.point-{index:04}.tally"))
}

fn sweep(config: &Path, force_mc: bool) -> Outcome {
    let mut spec = SweepSpec::from_file(config).map_err(|e| Failure::Config(e.to_string()))?;
    if force_mc {
        spec.mode = SweepMode::MonteCarlo;
        spec.mc.get_or_insert(MonteCarloSpec {
            source: SourceConfig::default(),
            detector: DetectorConfig::default(),
            seed: 0,
            grid_mixing: false,
            mixing_points: 65,
        });
    }
    let outcome = run_sweep(&spec, Execution::Parallel).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(&outcome.rows, spec.output.format, &spec.output.path).map_err(|e| Failure::Runtime(e.to_string()))?;
    eprintln!("wrote {} rows to {}", outcome.rows.len(), spec.output.path.display());

    for (k, tally) in outcome.tallies.iter().enumerate() {
        let path = tally_path(&spec, k);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
        }
        fs::write(&path, tally.to_text()).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    }
    if !outcome.tallies.is_empty() {
        eprintln!("wrote {} tallies next to {}", outcome.tallies.len(), tally_path(&spec, 0).display());
    }
    if let Some(cc) = outcome.cross_check {
        eprintln!(
            "cross-check: {}/{} per-basis QBER and C estimates within 3 sigma of closed form ({:.4})",
            cc.within,
            cc.checked,
            cc.fraction()
        );
    }
    if outcome.warnings > 0 {
        eprintln!("warning: {} rows lack sufficient statistics", outcome.warnings);
    }
    Ok(outcome.warnings > 0)
}

fn thresholds(noise: f64) -> Outcome {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Failure::Config(format!("--noise {noise} is outside [0, 1]")));
    }
    println!("protocol,sweep,threshold_rad,threshold_over_pi");
    for (protocol, axis, result) in threshold_table(noise) {
        match result {
            Ok(t) => println!("{protocol},{axis},{},{}", format_real(t), format_real(t / PI)),
            Err(_) => println!("{protocol},{axis},,"),
        }
    }
    Ok(false)
}

fn estimate_file(path: &Path, json: bool) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let tally = SessionTally::from_text(&text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let report = estimate(&tally).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    if json {
        let s = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("{s}");
    } else {
        print_report(&tally, &report);
    }
    Ok(false)
}

fn print_report(tally: &SessionTally, r: &EstimateReport) {
    println!("pulses {}", tally.total_sent());
    for axis in BasisAxis::ALL {
        let e = r.qber(axis);
        println!("q_{} {} ± {} (n={})", axis.to_string().to_lowercase(), format_real(e.value), format_real(e.std_error), e.samples);
    }
    let c = &r.correlators;
    for (name, e) in [("xx", c.xx), ("xy", c.xy), ("yx", c.yx), ("yy", c.yy), ("zz", c.zz)] {
        println!("corr_{name} {} ± {}", format_real(e.value), format_real(e.std_error));
    }
    println!("c_param {} ± {}", format_real(r.c.value), format_real(r.c.std_error));
    for p in ProtocolKind::ALL {
        match r.rate(p) {
            Some(x) => println!("rate_{p} {}", format_real(x)),
            None => println!("rate_{p} undefined"),
        }
    }
}
