//! `sweep`: run a scenario once per value of one numeric field.

use std::time::Instant;

use serde_json::Value;

use crate::output::{self, RunManifest};
use crate::run::execute;
use crate::{scenario, CliError, SweepArgs};

/// Axes whose schema type is an unsigned integer.
const INTEGER_AXES: [&str; 9] = [
    "horizon",
    "trials",
    "x",
    "windows",
    "rng_seed",
    "duration_blocks",
    "bins",
    "unlock_delay",
    "params.unlock_delay",
];

pub fn axis_value(axis: &str, raw: &str) -> Result<Value, CliError> {
    let x: f64 = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("sweep value `{raw}` is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::Usage(format!(
            "sweep value `{raw}` is not finite"
        )));
    }
    if INTEGER_AXES.contains(&axis) {
        if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
            return Err(CliError::Usage(format!(
                "`{axis}` needs a non-negative integer, got `{raw}`"
            )));
        }
        return Ok(Value::from(x as u64));
    }
    Ok(Value::from(x))
}

pub fn cmd_sweep(args: &SweepArgs, workers: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let c = &args.common;
    if !scenario::is_sweep_axis(&args.axis) {
        return Err(CliError::Usage(format!(
            "`{}` is not a numeric scenario field; choose one of {}",
            args.axis,
            scenario::SWEEP_AXES.join(", ")
        )));
    }
    if args.values.is_empty() {
        return Err(CliError::Usage("--values needs at least one value".into()));
    }
    let values = args
        .values
        .iter()
        .map(|raw| axis_value(&args.axis, raw))
        .collect::<Result<Vec<_>, _>>()?;

    let (base, base_cfg) = scenario::load(&c.scenario, c.seed, &c.overrides)?;
    let path = scenario::resolve_key(&args.axis);
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let mut value = base.clone();
        scenario::set_path(&mut value, &path, v.clone())?;
        let cfg = scenario::finish(value)?;
        let outcome = execute(&cfg)?;
        eprintln!(
            "{} = {v}: {}",
            args.axis,
            output::fmt_float(outcome.headline)
        );
        rows.push((v.to_string(), outcome.headline, outcome.stderr));
    }

    output::create_dir(&c.out)?;
    output::write_sweep(&c.out.join("sweep.csv"), &rows)?;
    let manifest = RunManifest {
        tool_version: output::tool_version(),
        command: "sweep",
        scenario_path: c.scenario.display().to_string(),
        config: &base_cfg,
        rng_seed: base_cfg.rng_seed,
        workers,
        artifacts: vec!["sweep.csv".into(), "manifest.json".into()],
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    output::write_json(&c.out.join("manifest.json"), &manifest)?;
    for (v, h, s) in &rows {
        println!("{v},{},{}", output::fmt_float(*h), output::fmt_float(*s));
    }
    Ok(())
}
