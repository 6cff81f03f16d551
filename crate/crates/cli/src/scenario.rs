//! Scenario loading with `key=value` overrides.
//!
//! Precedence: `--override` flags, then the scenario file, then built-in
//! defaults. Bare parameter names (`alpha`, `T`, ...) resolve into
//! `params`; dotted paths (`params.alpha`) address any field.

use std::path::Path;

use interleave_sim::ScenarioConfig;
use serde_json::Value;

use crate::CliError;

const PARAM_KEYS: [&str; 6] = [
    "T",
    "alpha",
    "unlock_delay",
    "genesis_d_w",
    "genesis_d_s",
    "max_future_drift",
];

/// Numeric fields a sweep may vary.
pub const SWEEP_AXES: [&str; 18] = [
    "k",
    "l",
    "horizon",
    "trials",
    "x",
    "windows",
    "leak_fraction",
    "rng_seed",
    "duration_days",
    "duration_blocks",
    "bins",
    "bin_width",
    "T",
    "alpha",
    "unlock_delay",
    "genesis_d_w",
    "genesis_d_s",
    "max_future_drift",
];

pub fn resolve_key(key: &str) -> Vec<String> {
    if key.contains('.') {
        key.split('.').map(str::to_string).collect()
    } else if PARAM_KEYS.contains(&key) {
        vec!["params".to_string(), key.to_string()]
    } else {
        vec![key.to_string()]
    }
}

pub fn is_sweep_axis(axis: &str) -> bool {
    let path = resolve_key(axis);
    match path.as_slice() {
        [p, k] if p == "params" => PARAM_KEYS.contains(&k.as_str()),
        [k] => SWEEP_AXES.contains(&k.as_str()),
        _ => false,
    }
}

/// JSON literal if it parses, otherwise a string.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

pub fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<(), CliError> {
    let mut cur = root;
    for (i, part) in path.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| {
            CliError::Usage(format!(
                "cannot set `{}`: `{}` is not an object",
                path.join("."),
                path[..i].join(".")
            ))
        })?;
        if i + 1 == path.len() {
            obj.insert(part.clone(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.clone())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

pub fn parse_override(spec: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Usage(format!(
            "override `{spec}` has an empty key"
        )));
    }
    Ok((resolve_key(key), parse_value(raw.trim())))
}

/// Reads a scenario file as JSON, reporting syntax and schema errors with line and column.
pub fn read_scenario_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let anchored = |e: serde_json::Error| {
        CliError::Usage(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    };
    // Deserializing the text (not a Value) keeps line numbers on schema errors.
    serde_json::from_str::<ScenarioConfig>(&text).map_err(anchored)?;
    serde_json::from_str(&text).map_err(anchored)
}

pub fn finish(value: Value) -> Result<ScenarioConfig, CliError> {
    let cfg: ScenarioConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Usage(format!("after overrides: {e}")))?;
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

pub fn load(
    path: &Path,
    seed: Option<u64>,
    overrides: &[String],
) -> Result<(Value, ScenarioConfig), CliError> {
    let mut value = read_scenario_value(path)?;
    for spec in overrides {
        let (key, v) = parse_override(spec)?;
        set_path(&mut value, &key, v)?;
    }
    if let Some(seed) = seed {
        set_path(&mut value, &["rng_seed".to_string()], Value::from(seed))?;
    }
    let cfg = finish(value.clone())?;
    Ok((value, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_resolve_into_params() {
        assert_eq!(resolve_key("alpha"), vec!["params", "alpha"]);
        assert_eq!(resolve_key("k"), vec!["k"]);
        assert_eq!(resolve_key("params.T"), vec!["params", "T"]);
    }

    #[test]
    fn values_parse_as_json_first() {
        assert_eq!(parse_value("0.5"), Value::from(0.5));
        assert_eq!(parse_value("true"), Value::from(true));
        assert_eq!(parse_value("abc"), Value::from("abc"));
    }

    #[test]
    fn set_path_creates_objects() {
        let mut v = serde_json::json!({"type": "fairness"});
        set_path(&mut v, &resolve_key("alpha"), Value::from(0.1)).unwrap();
        assert_eq!(v["params"]["alpha"], Value::from(0.1));
    }

    #[test]
    fn sweep_axes_are_numeric_fields() {
        assert!(is_sweep_axis("k"));
        assert!(is_sweep_axis("alpha"));
        assert!(is_sweep_axis("params.alpha"));
        assert!(!is_sweep_axis("type"));
        assert!(!is_sweep_axis("actors"));
        assert!(!is_sweep_axis("bogus"));
    }

    #[test]
    fn malformed_override_is_usage_error() {
        assert!(parse_override("alpha").is_err());
        assert!(parse_override("=1").is_err());
    }
}
