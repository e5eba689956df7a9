//! `--config` handling: a JSON object whose keys mirror the long flags in
//! snake_case. Keys may sit at the top level or under an object named after
//! the subcommand; the latter wins, and explicit flags win over both.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

pub fn load(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Usage("config must be a JSON object".into())),
        Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
    }
}

/// Merges config and flags into the resolved parameter set `P`, returning it
/// together with its JSON form for the manifest.
pub fn resolve<F, P>(
    subcommand: &str,
    flags: &F,
    config: Option<&Map<String, Value>>,
) -> Result<(P, Value), CliError>
where
    F: Serialize,
    P: DeserializeOwned + Serialize,
{
    let mut merged = Map::new();
    if let Some(cfg) = config {
        for (k, v) in cfg {
            if !v.is_object() {
                merged.insert(k.clone(), v.clone());
            }
        }
        if let Some(Value::Object(section)) = cfg.get(subcommand) {
            merged.extend(section.clone());
        }
    }
    match serde_json::to_value(flags) {
        Ok(Value::Object(f)) => merged.extend(f),
        _ => unreachable!("flag structs serialise to objects"),
    }
    let params: P = serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))?;
    let resolved = serde_json::to_value(&params).expect("parameters serialise");
    Ok((params, resolved))
}
