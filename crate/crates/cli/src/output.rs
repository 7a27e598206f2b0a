//! Rendering and atomic writing of result files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// 17 significant digits, round-trips an `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.writer.write_record(fields).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn into_bytes(self) -> Result<Vec<u8>, CliError> {
        self.writer.into_inner().map_err(|e| CliError::Output(e.to_string()))
    }
}

#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub master_seed: u64,
    /// The keys that were set, after overrides.
    pub config: serde_json::Value,
}

impl<'a> Provenance<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig, master_seed: u64) -> Result<Self, CliError> {
        let mut value = serde_json::to_value(config).map_err(|e| CliError::Output(e.to_string()))?;
        if let serde_json::Value::Object(map) = &mut value {
            map.retain(|_, v| !v.is_null());
        }
        // Where the results go does not change them.
        let mut hashed = value.clone();
        if let serde_json::Value::Object(map) = &mut hashed {
            map.remove("output");
        }
        let canonical = serde_json::to_vec(&hashed).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: hex::encode(Sha256::digest(&canonical)),
            master_seed,
            config: value,
        })
    }
}

/// `<stem><suffix>`, e.g. `runs/scan` + `_maxima.csv`.
pub fn sibling(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    stem.with_file_name(name)
}

pub fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes every file to a temporary sibling first and renames them into
/// place only when all were written. On failure nothing new is left behind.
pub fn commit(files: Vec<(PathBuf, Vec<u8>)>) -> Result<(), CliError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in &files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        tmp.write_all(bytes).and_then(|_| tmp.flush())?;
        staged.push((tmp, path.clone()));
    }
    let mut placed: Vec<PathBuf> = Vec::new();
    for (tmp, path) in staged {
        if let Err(e) = tmp.persist(&path) {
            for p in &placed {
                let _ = std::fs::remove_file(p);
            }
            return Err(CliError::Output(format!("{}: {}", path.display(), e.error)));
        }
        placed.push(path);
    }
    for (path, _) in &files {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}
