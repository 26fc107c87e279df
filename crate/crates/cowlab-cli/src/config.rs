use std::fs;
use std::path::Path;

use cowlab_core::params::ExperimentalParams;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    One(ExperimentalParams),
    Many(Vec<ExperimentalParams>),
}

pub struct Config {
    pub rows: Vec<ExperimentalParams>,
    /// Hex SHA-256 of the raw file.
    pub digest: String,
}

pub fn load(path: &Path) -> Result<Config, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let parsed: ConfigFile = serde_json::from_slice(&bytes).map_err(|e| {
        CliError::Config(format!(
            "{}: expected a parameter object or an array of them ({e})",
            path.display()
        ))
    })?;
    let rows = match parsed {
        ConfigFile::One(p) => vec![p],
        ConfigFile::Many(v) => v,
    };
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no parameter sets", path.display())));
    }
    for (i, p) in rows.iter().enumerate() {
        p.validate().map_err(|e| CliError::Config(format!("{}: row {i}: {e}", path.display())))?;
    }
    Ok(Config { rows, digest: hex::encode(Sha256::digest(&bytes)) })
}

impl Config {
    pub fn single(&self) -> Result<&ExperimentalParams, CliError> {
        match self.rows.as_slice() {
            [p] => Ok(p),
            _ => Err(CliError::Config(format!(
                "this command takes exactly one parameter set, got {}",
                self.rows.len()
            ))),
        }
    }

    pub fn require_protocol(&self, four_state: bool) -> Result<(), CliError> {
        for (i, p) in self.rows.iter().enumerate() {
            if p.is_four_state() != four_state {
                let want = if four_state { "four-state (f_d and f_v)" } else { "three-state" };
                return Err(CliError::Config(format!("row {i}: expected {want} parameters")));
            }
        }
        Ok(())
    }
}
