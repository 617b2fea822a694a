//! Flat TOML configuration files.
//!
//! A config file is a flat list of `key = value` pairs whose keys are the
//! fields of [`ExperimentConfig`]. Missing keys take their defaults; unknown
//! keys, nested tables and ill-typed values are errors naming the key.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error("<document>", e.message()))?;
    let defaults = toml::Table::try_from(ExperimentConfig::default()).expect("defaults serialize");
    for (key, value) in &table {
        if !defaults.contains_key(key) {
            return Err(config_error(key, "unknown key"));
        }
        if value.is_table() {
            return Err(config_error(key, "nested tables are not allowed"));
        }
        // Deserialize the key alone over the defaults so a type error names it.
        let mut single = defaults.clone();
        single.insert(key.clone(), value.clone());
        single
            .try_into::<ExperimentConfig>()
            .map_err(|e| config_error(key, e.message()))?;
    }
    let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| config_error("<document>", e.message()))?;
    cfg.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => config_error(&name, reason),
        other => other,
    })?;
    Ok(cfg)
}

/// Reads a config file; also returns its raw bytes for hashing.
pub fn load_config_bytes(path: &Path) -> Result<(ExperimentConfig, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| config_error("<document>", "not valid UTF-8"))?;
    Ok((parse_config(text)?, bytes))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    load_config_bytes(path).map(|(c, _)| c)
}

/// Serializes a config as a flat document that `parse_config` reads back.
pub fn config_to_toml(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}
