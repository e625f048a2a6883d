//! Configuration resolution: built-in defaults, then the JSON config file,
//! then command-line flags. Flags use the config keys in kebab case.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// A fully resolved experiment configuration.
pub trait ExperimentConfig: Serialize + DeserializeOwned + Default {
    fn seed(&self) -> u64;
}

fn overlay(base: &mut Map<String, Value>, layer: Value, origin: &str) -> CliResult<()> {
    match layer {
        Value::Object(m) => {
            for (k, v) in m {
                if v.is_null() {
                    continue;
                }
                base.insert(k, v);
            }
            Ok(())
        }
        Value::Null => Ok(()),
        _ => Err(CliError::config(format!("{origin} must be a JSON object"))),
    }
}

/// Merges `file` (if any) and `flags` over the defaults of `C` and checks the
/// result against the schema of `C`; unknown keys are rejected.
pub fn resolve<C: ExperimentConfig, F: Serialize>(file: Option<&Path>, flags: &F) -> CliResult<C> {
    let Value::Object(mut merged) = serde_json::to_value(C::default())? else {
        return Err(CliError::config("default configuration is not an object"));
    };
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        overlay(&mut merged, value, "config file")?;
    }
    overlay(&mut merged, serde_json::to_value(flags)?, "flags")?;
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::config(e.to_string()))
}

/// SHA-256 of the canonical JSON of `(command, config)`.
pub fn config_hash<C: Serialize>(command: &str, cfg: &C) -> CliResult<String> {
    let canonical = serde_json::to_vec(&serde_json::json!({ "command": command, "config": cfg }))?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

/// Serde helpers for exponents written as exact rational strings.
pub mod rational {
    use serde::{Deserialize, Deserializer, Serializer};
    use simplex_core::exponents::parse_rational;
    use simplex_core::Q;

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}
