//! TOML run files and their merge with command-line flags.

use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A run file: global keys at the top, one table per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub decompose: Option<toml::Table>,
    pub influence: Option<toml::Table>,
    #[serde(rename = "noise-cov")]
    pub noise_cov: Option<toml::Table>,
    #[serde(rename = "bounds-check")]
    pub bounds_check: Option<toml::Table>,
    pub hyper: Option<toml::Table>,
    pub tribes: Option<toml::Table>,
    pub polymer: Option<toml::Table>,
    #[serde(rename = "shf-independence")]
    pub shf_independence: Option<toml::Table>,
    pub counterexample: Option<toml::Table>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn section(&self, name: &str) -> Option<&toml::Table> {
        match name {
            "decompose" => self.decompose.as_ref(),
            "influence" => self.influence.as_ref(),
            "noise-cov" => self.noise_cov.as_ref(),
            "bounds-check" => self.bounds_check.as_ref(),
            "hyper" => self.hyper.as_ref(),
            "tribes" => self.tribes.as_ref(),
            "polymer" => self.polymer.as_ref(),
            "shf-independence" => self.shf_independence.as_ref(),
            "counterexample" => self.counterexample.as_ref(),
            _ => None,
        }
    }
}

pub fn from_command_line(m: &ArgMatches, id: &str) -> bool {
    m.value_source(id) == Some(ValueSource::CommandLine)
}

/// Overlays the config table on the parsed arguments, except where a flag was
/// given explicitly. Keys must name a parameter of the subcommand.
pub fn merge<T: Serialize + DeserializeOwned>(args: &T, m: &ArgMatches, table: Option<&toml::Table>, section: &str) -> Result<T, CliError> {
    let serde_json::Value::Object(mut map) = serde_json::to_value(args).expect("arguments serialize") else {
        unreachable!("argument structs serialize to maps")
    };
    if let Some(table) = table {
        for (key, value) in table {
            if !map.contains_key(key) {
                return Err(CliError::config(format!("unknown key `{key}` in [{section}]")));
            }
            if !from_command_line(m, key) {
                let v = serde_json::to_value(value).map_err(|e| CliError::config(format!("[{section}] {key}: {e}")))?;
                map.insert(key.clone(), v);
            }
        }
    }
    serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| CliError::config(format!("[{section}]: {e}")))
}
