//! Config-file overlay, hashing and the manifest sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Fills every parameter not given on the command line from `section` of
/// the TOML file at `path`.
pub fn overlay<T: Serialize + DeserializeOwned>(args: T, path: &Path, section: &str, matches: &ArgMatches) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let Some(values) = file.get(section) else {
        return Ok(args);
    };
    let values = values
        .as_table()
        .ok_or_else(|| CliError::Config(format!("[{section}] must be a table")))?;
    let mut current = toml::Table::try_from(&args).map_err(|e| CliError::Config(e.to_string()))?;
    for (key, value) in values {
        let id = key.replace('-', "_");
        if !current.contains_key(&id) && !is_optional(matches, &id) {
            return Err(CliError::Config(format!("unknown key `{key}` in [{section}]")));
        }
        if matches.value_source(&id) != Some(ValueSource::CommandLine) {
            current.insert(id, value.clone());
        }
    }
    toml::Value::Table(current)
        .try_into()
        .map_err(|e| CliError::Config(format!("[{section}]: {e}")))
}

fn is_optional(matches: &ArgMatches, id: &str) -> bool {
    matches.ids().any(|i| i.as_str() == id)
}

/// Hex SHA-256 of the canonical TOML form of the effective parameters.
pub fn config_hash<T: Serialize>(params: &T) -> anyhow::Result<String> {
    let text = toml::to_string(params)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    subcommand: &'a str,
    version: &'a str,
    config_hash: &'a str,
    config: &'a T,
    files: &'a [String],
    summary: serde_json::Value,
}

/// Output directory with the sidecar written at the end of a run.
pub struct Output {
    pub dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: PathBuf) -> anyhow::Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, files: Vec::new() })
    }

    /// Path for `name`, recorded in the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn finish<T: Serialize>(self, subcommand: &str, params: &T, summary: serde_json::Value) -> anyhow::Result<String> {
        let hash = config_hash(params)?;
        let m = Manifest {
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: &hash,
            config: params,
            files: &self.files,
            summary,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(hash)
    }
}
