//! Stored-run index, cached inference overlays and tester playback.

mod index;
mod overlay;
mod session;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

pub use index::{scan_runs, RunIndexEntry, ScenarioSummary};
pub use overlay::{build_overlay, overlay_path, EnrichedFrame, EnrichedUav, ReplayModels, RunOverlay, RunReport};
pub use session::{Command, PlaybackSession, ServerMessage};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("data directory {0} is unreadable: {1}")]
    DataDirUnreadable(PathBuf, String),
    #[error("run {0} not found")]
    RunNotFound(String),
    #[error("bad range [{from}, {to}]")]
    BadRange { from: f64, to: f64 },
    #[error("malformed command {0:?}")]
    MalformedCommand(String),
    #[error("overlay for {run_id}: {message}")]
    Overlay { run_id: String, message: String },
}

/// Runs and overlays of one data directory, fixed at open time.
#[derive(Debug)]
pub struct ReplayStore {
    data_dir: PathBuf,
    entries: Vec<RunIndexEntry>,
    overlays: HashMap<String, Arc<RunOverlay>>,
    warnings: Vec<String>,
}

impl ReplayStore {
    /// Indexes every readable log and builds (or loads the cached)
    /// overlay of each. Logs that fail to parse or overlay are skipped
    /// with a warning.
    pub fn open(data_dir: impl AsRef<Path>, models: &ReplayModels) -> Result<Self, ReplayError> {
        let data_dir = data_dir.as_ref().to_path_buf();
        let (found, mut warnings) = scan_runs(&data_dir)?;
        let built: Vec<Result<(RunIndexEntry, RunOverlay), String>> = found
            .into_par_iter()
            .map(|(entry, log)| {
                overlay::load_or_build(&entry.path, &entry.run_id, &log, models)
                    .map(|o| (entry, o))
                    .map_err(|e| e.to_string())
            })
            .collect();
        let mut entries = Vec::new();
        let mut overlays = HashMap::new();
        for b in built {
            match b {
                Ok((entry, o)) => {
                    overlays.insert(entry.run_id.clone(), Arc::new(o));
                    entries.push(entry);
                }
                Err(e) => warnings.push(e),
            }
        }
        for w in &warnings {
            tracing::warn!("{w}");
        }
        Ok(Self { data_dir, entries, overlays, warnings })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    /// Sorted by created time, then run id.
    pub fn list_runs(&self) -> &[RunIndexEntry] {
        &self.entries
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn run(&self, run_id: &str) -> Result<&RunIndexEntry, ReplayError> {
        self.entries.iter().find(|e| e.run_id == run_id).ok_or_else(|| ReplayError::RunNotFound(run_id.into()))
    }

    pub fn overlay(&self, run_id: &str) -> Result<Arc<RunOverlay>, ReplayError> {
        self.overlays.get(run_id).cloned().ok_or_else(|| ReplayError::RunNotFound(run_id.into()))
    }

    /// Frames with `from <= time <= to`.
    pub fn get_frames(&self, run_id: &str, from: f64, to: f64) -> Result<Vec<EnrichedFrame>, ReplayError> {
        let o = self.overlay(run_id)?;
        if !(from.is_finite() && to.is_finite() && from <= to) {
            return Err(ReplayError::BadRange { from, to });
        }
        Ok(o.frames_between(from, to).to_vec())
    }

    pub fn session(&self, run_id: &str) -> Result<PlaybackSession, ReplayError> {
        Ok(PlaybackSession::new(self.overlay(run_id)?))
    }
}
