//! Files written by `run` and `sweep`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use interleave_core::dump::write_dump;
use interleave_core::BlockKind;
use interleave_sim::experiments::TrialOutcome;
use interleave_sim::{ScenarioConfig, SimRun};
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const DECIMALS: i32 = 6;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Rounds every float in `v` to [`DECIMALS`] places; integers stay exact.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let scale = 10f64.powi(DECIMALS);
            let r = (x * scale).round() / scale;
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_floats),
        Value::Object(m) => m.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.prec$}", prec = DECIMALS as usize)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    writeln!(w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_block_times(path: &Path, run: &SimRun, kind: BlockKind) -> Result<(), CliError> {
    write_rows(
        path,
        &["height", "timestamp", "delta_seconds"],
        run.of_kind(kind).map(|r| {
            [
                r.height.to_string(),
                fmt_float(r.timestamp),
                fmt_float(r.delta),
            ]
        }),
    )
}

pub fn write_difficulty_trace(path: &Path, run: &SimRun) -> Result<(), CliError> {
    write_rows(
        path,
        &["height", "kind", "difficulty"],
        run.records.iter().map(|r| {
            [
                r.height.to_string(),
                r.kind.to_string(),
                fmt_float(r.difficulty),
            ]
        }),
    )
}

pub fn write_trials(path: &Path, outcomes: &[TrialOutcome]) -> Result<(), CliError> {
    write_rows(
        path,
        &[
            "trial",
            "end_time",
            "honest_blocks",
            "attacker_blocks",
            "honest_td",
            "attacker_td",
            "attacker_wins",
        ],
        outcomes.iter().map(|o| {
            [
                o.trial.to_string(),
                fmt_float(o.end_time),
                o.honest_blocks.to_string(),
                o.attacker_blocks.to_string(),
                fmt_float(o.honest_td),
                fmt_float(o.attacker_td),
                o.attacker_wins.to_string(),
            ]
        }),
    )
}

pub fn write_sweep(path: &Path, rows: &[(String, f64, f64)]) -> Result<(), CliError> {
    write_rows(
        path,
        &["axis_value", "headline_stat", "stderr"],
        rows.iter()
            .map(|(v, h, s)| [v.clone(), fmt_float(*h), fmt_float(*s)]),
    )
}

/// `verify` input: the protocol parameters plus the stake table.
#[derive(Debug, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub params: interleave_core::ProtocolParams,
    /// Locked at height 0, effective from height 1.
    pub stakes: std::collections::BTreeMap<String, u64>,
}

/// Writes `chain.jsonl` (exact floats) and `chain_params.json`.
pub fn write_chain_dump(dir: &Path, run: &SimRun) -> Result<Vec<String>, CliError> {
    let (store, _) = run
        .chain
        .as_ref()
        .ok_or_else(|| CliError::Runtime("run kept no chain to dump".into()))?;
    let path = dir.join("chain.jsonl");
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    write_dump(&mut w, store.canonical_chain()).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))?;

    let chain_params = ChainParams {
        params: run.params.clone(),
        stakes: run
            .actors
            .iter()
            .filter(|a| a.stake > 0)
            .map(|a| (a.id.clone(), a.stake))
            .collect(),
    };
    write_json(&dir.join("chain_params.json"), &chain_params)?;
    Ok(vec!["chain.jsonl".into(), "chain_params.json".into()])
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool_version: String,
    pub command: &'a str,
    pub scenario_path: String,
    pub config: &'a ScenarioConfig,
    pub rng_seed: u64,
    pub workers: usize,
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub fn tool_version() -> String {
    format!("unity-sim {}", env!("CARGO_PKG_VERSION"))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}
