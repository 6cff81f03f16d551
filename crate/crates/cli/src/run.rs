//! `run`: execute one scenario and write its artifacts.

use std::path::Path;
use std::time::Instant;

use interleave_core::BlockKind;
use interleave_sim::experiments::{steady_state_report, TrialOutcome};
use interleave_sim::stats::{moments, Moments};
use interleave_sim::{
    run_collusion_headstart, run_convergence, run_double_spend, run_fairness, run_stake_grinding,
    simulate, ScenarioConfig, ScenarioType, SimRun,
};
use serde_json::{json, Value};

use crate::output::{self, RunManifest};
use crate::{scenario, CliError, RunArgs};

pub struct Outcome {
    /// Unrounded; see [`output::round_floats`].
    pub summary: Value,
    pub headline: f64,
    pub stderr: f64,
    pub run: Option<SimRun>,
    pub trials: Option<Vec<TrialOutcome>>,
}

fn to_value(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn mean_stderr(m: &Moments) -> f64 {
    if m.n > 1 {
        m.std / (m.n as f64).sqrt()
    } else {
        f64::NAN
    }
}

pub fn execute(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let (result, headline, stderr, run, trials) = match cfg.kind {
        ScenarioType::SteadyState => {
            let run = simulate(cfg)?;
            if let Some(s) = run.stall {
                return Err(CliError::Stall(s));
            }
            let report = steady_state_report(&run, cfg.bins, cfg.bin_width);
            let m = moments(&run.deltas(BlockKind::Work));
            (to_value(&report), m.mean, mean_stderr(&m), Some(run), None)
        }
        ScenarioType::Fairness => {
            let (report, run) = run_fairness(cfg)?;
            let first = &report.actors[0];
            let se = interleave_sim::stats::binomial_stderr(first.total, report.blocks);
            (to_value(&report), first.total, se, Some(run), None)
        }
        ScenarioType::Convergence => {
            let (report, run) = run_convergence(cfg)?;
            let n = run.blocks_of(BlockKind::Stake).max(2) as f64;
            let rel = report.stake.relative_std_after.unwrap_or(f64::NAN);
            // standard error of a standard deviation, normal approximation
            let se = rel / (2.0 * (n - 1.0)).sqrt();
            (to_value(&report), rel, se, Some(run), None)
        }
        ScenarioType::Collusion => {
            let (report, run) = run_collusion_headstart(cfg)?;
            (
                to_value(&report),
                report.miner_excess_share,
                report.stderr,
                Some(run),
                None,
            )
        }
        ScenarioType::DoubleSpend => {
            let mut report = run_double_spend(cfg)?;
            let outcomes = std::mem::take(&mut report.outcomes);
            let mut v = to_value(&report);
            if let Value::Object(m) = &mut v {
                m.remove("outcomes");
            }
            (v, report.win_rate, report.stderr, None, Some(outcomes))
        }
        ScenarioType::StakeGrinding => {
            let report = run_stake_grinding(cfg)?;
            (
                to_value(&report),
                report.frequency,
                report.stderr,
                None,
                None,
            )
        }
    };
    let summary = json!({
        "scenario_type": cfg.kind.as_str(),
        "name": cfg.name,
        "rng_seed": cfg.rng_seed,
        "headline_stat": headline,
        "result": result,
    });
    Ok(Outcome {
        summary,
        headline,
        stderr,
        run,
        trials,
    })
}

/// Writes the summary and sample files; returns the artifact names.
pub fn write_artifacts(
    dir: &Path,
    outcome: &Outcome,
    dump_chain: bool,
) -> Result<Vec<String>, CliError> {
    output::create_dir(dir)?;
    let mut artifacts = Vec::new();
    let mut summary = outcome.summary.clone();
    output::round_floats(&mut summary);
    output::write_json(&dir.join("summary.json"), &summary)?;
    artifacts.push("summary.json".to_string());
    if let Some(run) = &outcome.run {
        output::write_block_times(&dir.join("blocktimes_pow.csv"), run, BlockKind::Work)?;
        output::write_block_times(&dir.join("blocktimes_pos.csv"), run, BlockKind::Stake)?;
        output::write_difficulty_trace(&dir.join("difficulty_trace.csv"), run)?;
        artifacts.extend(
            [
                "blocktimes_pow.csv",
                "blocktimes_pos.csv",
                "difficulty_trace.csv",
            ]
            .map(String::from),
        );
        if dump_chain {
            artifacts.extend(output::write_chain_dump(dir, run)?);
        }
    } else if dump_chain {
        return Err(CliError::Usage(
            "--dump-chain needs a scenario that simulates a single chain".into(),
        ));
    }
    if let Some(trials) = &outcome.trials {
        output::write_trials(&dir.join("trials.csv"), trials)?;
        artifacts.push("trials.csv".to_string());
    }
    Ok(artifacts)
}

pub fn cmd_run(args: &RunArgs, workers: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let c = &args.common;
    let (_, cfg) = scenario::load(&c.scenario, c.seed, &c.overrides)?;
    let outcome = execute(&cfg)?;
    let mut artifacts = write_artifacts(&c.out, &outcome, args.dump_chain)?;
    artifacts.push("manifest.json".to_string());
    let manifest = RunManifest {
        tool_version: output::tool_version(),
        command: "run",
        scenario_path: c.scenario.display().to_string(),
        config: &cfg,
        rng_seed: cfg.rng_seed,
        workers,
        artifacts,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    output::write_json(&c.out.join("manifest.json"), &manifest)?;
    let mut summary = outcome.summary;
    output::round_floats(&mut summary);
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}
