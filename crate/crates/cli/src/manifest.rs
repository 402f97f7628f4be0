use std::fs;
use std::path::{Path, PathBuf};

use dipt_core::pipeline::run_id_of_bytes;
use dipt_core::runlog::RunLog;
use dipt_core::sim::batch::BatchSpec;
use dipt_core::{check_format_version, FORMAT_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub run_id: String,
    /// Relative to the manifest's directory.
    pub file: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub seed: u64,
    pub count: u64,
    #[serde(default)]
    pub batch: BatchSpec,
    pub runs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(seed: u64, batch: BatchSpec) -> Self {
        Self { format_version: FORMAT_VERSION.to_string(), seed, count: 0, batch, runs: Vec::new() }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        check_format_version(&m.format_version).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}

/// A run loaded through a manifest, with its identity checked.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub run_id: String,
    pub seed: u64,
    pub log: RunLog,
}

/// Reads every run a manifest lists. A file whose content hash differs
/// from the recorded id is a schema error.
pub fn load_runs(manifest_path: &Path) -> Result<(Manifest, Vec<LoadedRun>), CliError> {
    let manifest = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let runs = manifest
        .runs
        .par_iter()
        .map(|e| {
            let path: PathBuf = base.join(&e.file);
            let bytes = fs::read(&path).map_err(|err| CliError::io(&path, err))?;
            let id = run_id_of_bytes(&bytes);
            if id != e.run_id {
                return Err(CliError::Schema(format!("{}: content hash {id} does not match run id {}", path.display(), e.run_id)));
            }
            let log = RunLog::from_jsonl(&bytes).map_err(|err| CliError::Schema(format!("{}: {err}", path.display())))?;
            Ok(LoadedRun { run_id: id, seed: e.seed, log })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, runs))
}

pub fn run_file_name(seed: u64) -> String {
    format!("run_{seed:06}.jsonl")
}
