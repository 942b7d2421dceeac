//! Experiment harness: constructs systems, runs audits, sweeps,
//! correction experiments, and replays saved reports.

mod config;
mod instance;
mod replay;
mod run;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{apply_override, resolve, ConfigDoc, ResolvedConfig};

#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Resource(String),
    ReplayMismatch(String),
    Io(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "config error: {m}"),
            HarnessError::Resource(m) => write!(f, "resource guard: {m}"),
            HarnessError::ReplayMismatch(m) => write!(f, "replay mismatch: {m}"),
            HarnessError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl HarnessError {
    fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Resource(_) => 3,
            HarnessError::ReplayMismatch(_) => 4,
            HarnessError::Io(_) => 1,
        }
    }
}

impl From<ltc_core::LtcError> for HarnessError {
    fn from(e: ltc_core::LtcError) -> Self {
        match e {
            ltc_core::LtcError::Resource(m) => HarnessError::Resource(m),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "ltc-harness",
    about = "Lifted-code experiments on layered agreement samplers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed (required here or in the config; no clock default).
    #[arg(long)]
    seed: Option<u64>,
    /// Field modulus for a generated system.
    #[arg(long)]
    p: Option<u16>,
    /// Ambient dimension for a generated system.
    #[arg(long)]
    n: Option<usize>,
    /// Lowest flat dimension of the hierarchy.
    #[arg(long)]
    q0: Option<usize>,
    /// Middle flat dimension.
    #[arg(long)]
    q1: Option<usize>,
    /// Top flat dimension.
    #[arg(long)]
    q2: Option<usize>,
    /// Degree of the line base codes.
    #[arg(long)]
    rs_degree: Option<usize>,
    /// Load the system from a serialized document instead.
    #[arg(long)]
    system_file: Option<PathBuf>,
    /// Output directory (flag beats the LTC_OUT_DIR variable).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override any config field by dotted path, e.g. trials.alpha=64.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the system and codes; report ranks, dimensions, distances.
    Build(RunArgs),
    /// Validate the chain and audit the containment graph's sampler constant.
    MasAudit(RunArgs),
    /// Corrupt codewords per level and measure tester strength.
    RhoSweep(RunArgs),
    /// Estimate the agreement soundness constant.
    AlphaEstimate(RunArgs),
    /// Run iterative self-correction on corrupted codewords.
    Correct(RunArgs),
    /// Full pipeline: measure every constant, audit the hypothesis, correct.
    EndToEnd(RunArgs),
    /// Re-execute a saved report and verify metric equality.
    Replay {
        /// Path to a report written by a previous run.
        report: PathBuf,
    },
}

fn load_config(args: &RunArgs, experiment: &str) -> Result<ResolvedConfig, HarnessError> {
    let mut raw: serde_json::Value = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                HarnessError::Config(format!("config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| HarnessError::Config(format!("config {}: {e}", path.display())))?
        }
        None => serde_json::to_value(ConfigDoc::default()).expect("default config serializes"),
    };

    for spec in &args.set {
        apply_override(&mut raw, spec)?;
    }
    // dedicated flags are sugar for the same dotted paths
    let mut sugar: Vec<String> = Vec::new();
    if let Some(seed) = args.seed {
        sugar.push(format!("seed={seed}"));
    }
    if let Some(dir) = &args.out_dir {
        sugar.push(format!("out_dir={}", dir.display()));
    }
    if let Some(path) = &args.system_file {
        sugar.push(format!("system.file={}", path.display()));
    }
    match (args.p, args.n) {
        (Some(p), Some(n)) => {
            if let (Some(q0), Some(q1), Some(q2)) = (args.q0, args.q1, args.q2) {
                sugar.push(format!(
                    "system.grassmann={{\"p\":{p},\"n\":{n},\"q0\":{q0},\"q1\":{q1},\"q2\":{q2}}}"
                ));
            } else if args.q0.is_none() && args.q1.is_none() && args.q2.is_none() {
                sugar.push(format!("system.lines={{\"p\":{p},\"n\":{n}}}"));
            } else {
                return Err(HarnessError::Config(
                    "system: give all of --q0 --q1 --q2 or none of them".into(),
                ));
            }
        }
        (None, None) => {
            if args.q0.is_some() || args.q1.is_some() || args.q2.is_some() {
                return Err(HarnessError::Config(
                    "system: --q0/--q1/--q2 need --p and --n".into(),
                ));
            }
        }
        _ => {
            return Err(HarnessError::Config(
                "system: --p and --n must be given together".into(),
            ));
        }
    }
    if let Some(r) = args.rs_degree {
        sugar.push(format!("base.rs_degree={r}"));
    }
    sugar.push(format!("experiment={experiment}"));
    for spec in &sugar {
        apply_override(&mut raw, spec)?;
    }

    let doc: ConfigDoc = serde_json::from_value(raw)
        .map_err(|e| HarnessError::Config(format!("config: {e}")))?;
    resolve(doc, std::env::var("LTC_OUT_DIR").ok())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    let (args, experiment) = match &cli.command {
        Command::Build(a) => (a.clone(), "build"),
        Command::MasAudit(a) => (a.clone(), "mas-audit"),
        Command::RhoSweep(a) => (a.clone(), "rho-sweep"),
        Command::AlphaEstimate(a) => (a.clone(), "alpha-estimate"),
        Command::Correct(a) => (a.clone(), "correct"),
        Command::EndToEnd(a) => (a.clone(), "end-to-end"),
        Command::Replay { report } => return replay::replay(report),
    };
    let cfg = load_config(&args, experiment)?;
    run::run_and_write(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
