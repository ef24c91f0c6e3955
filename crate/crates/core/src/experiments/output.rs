use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::ExperimentConfig;

/// Fixed CSV column names of an output row type.
pub trait CsvSchema {
    const HEADER: &'static [&'static str];
}

/// Writes the header and `rows`. The header is written even when there are
/// no rows so every output file has the same shape.
pub fn write_csv<S: Serialize + CsvSchema>(path: &Path, rows: &[S]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io)?;
    w.write_record(S::HEADER).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// SHA-256 of the configuration as re-serialized TOML, ignoring the output
/// location and thread count (neither changes results).
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output_dir = None;
    c.threads = None;
    let digest = Sha256::digest(c.to_toml_string()?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Run manifest, written as TOML.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub rows_written: usize,
    pub row_errors: usize,
    /// Wall-clock seconds per stage.
    pub stage_timings: BTreeMap<String, f64>,
    pub summary: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}
