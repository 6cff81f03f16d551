//! `unity-sim`: run scenarios, verify chain dumps, sweep a parameter.
//!
//! Exit codes: 0 success, 1 verification violations, 2 usage or parse
//! error, 3 the simulated network stalled.

mod output;
mod run;
mod scenario;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use interleave_sim::StallReport;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Violations(usize),
    Stall(StallReport),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Violations(_) | CliError::Runtime(_) => 1,
            CliError::Stall(_) => 3,
        }
    }
}

impl From<interleave_sim::SimError> for CliError {
    fn from(e: interleave_sim::SimError) -> Self {
        match e {
            interleave_sim::SimError::Stall(s) => CliError::Stall(s),
            interleave_sim::SimError::Config(m) => CliError::Usage(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "unity-sim",
    version,
    about = "Interleaved PoW/PoS chain simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write summary.json, CSV samples and manifest.json.
    ///
    /// Values come from --override flags first, then the scenario file, then
    /// built-in defaults. Bare protocol names (T, alpha, unlock_delay,
    /// genesis_d_w, genesis_d_s, max_future_drift) address `params`; dotted
    /// paths such as params.alpha address any field.
    Run(RunArgs),
    /// Replay a chain dump through block validation; one line per violation.
    Verify(VerifyArgs),
    /// Run a scenario once per value of one numeric field; writes sweep.csv.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
pub struct CommonArgs {
    pub scenario: PathBuf,
    /// Overrides the scenario's rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// KEY=VALUE, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(short = 'o', long = "out", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for Monte Carlo trials [default: available cores; env UNITY_SIM_WORKERS].
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(clap::Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write chain.jsonl and chain_params.json for `verify`.
    #[arg(long)]
    pub dump_chain: bool,
}

#[derive(clap::Args)]
pub struct VerifyArgs {
    pub chain_dump: PathBuf,
    pub params_file: PathBuf,
}

#[derive(clap::Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Numeric scenario field to vary, e.g. k, l, alpha.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<String>,
}

pub fn worker_count(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("UNITY_SIM_WORKERS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("UNITY_SIM_WORKERS=`{v}` is not a count"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn init_pool(flag: Option<usize>) -> Result<usize, CliError> {
    let n = worker_count(flag)?.max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(n)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => init_pool(args.common.workers).and_then(|w| run::cmd_run(&args, w)),
        Command::Verify(args) => verify::cmd_verify(&args),
        Command::Sweep(args) => {
            init_pool(args.common.workers).and_then(|w| sweep::cmd_sweep(&args, w))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
                CliError::Violations(n) => eprintln!("{n} violation(s)"),
                CliError::Stall(s) => {
                    eprintln!(
                        "StallDetected: no {} producer after height {} (t = {}s)",
                        s.waiting_for, s.height, s.time
                    );
                    let report = serde_json::json!({ "error": "StallDetected", "stall": s });
                    println!("{report}");
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
