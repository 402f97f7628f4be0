use std::fs;
use std::path::{Path, PathBuf};
use std::time::UNIX_EPOCH;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::pipeline::run_id_of_bytes;
use crate::replay::ReplayError;
use crate::runlog::{Outcome, RunLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub area_width: f64,
    pub area_height: f64,
    pub target_position: Vec2,
    pub visibility: f64,
    pub light_level: f64,
    pub uav_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIndexEntry {
    pub run_id: String,
    pub file_name: String,
    #[serde(skip)]
    pub path: PathBuf,
    /// Seconds since the Unix epoch.
    pub created: f64,
    pub duration: f64,
    pub summary: ScenarioSummary,
    pub outcome: Outcome,
}

fn created_secs(meta: &fs::Metadata) -> f64 {
    meta.created()
        .or_else(|_| meta.modified())
        .ok()
        .and_then(|t| t.duration_since(UNIX_EPOCH).ok())
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Parses every `*.jsonl` file in `dir`. Unreadable or invalid files are
/// returned as warnings instead of failing the scan.
pub fn scan_runs(dir: &Path) -> Result<(Vec<(RunIndexEntry, RunLog)>, Vec<String>), ReplayError> {
    let unreadable = |e: std::io::Error| ReplayError::DataDirUnreadable(dir.to_path_buf(), e.to_string());
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(unreadable)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut found = Vec::new();
    let mut warnings = Vec::new();
    for path in paths {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) => {
                warnings.push(format!("skipping {name}: {e}"));
                continue;
            }
        };
        let log = match RunLog::from_jsonl(&bytes) {
            Ok(l) => l,
            Err(e) => {
                warnings.push(format!("skipping {name}: {e}"));
                continue;
            }
        };
        let Some((first, last)) = log.time_span() else {
            warnings.push(format!("skipping {name}: no telemetry"));
            continue;
        };
        let created = fs::metadata(&path).map(|m| created_secs(&m)).unwrap_or(0.0);
        let c = &log.config;
        let entry = RunIndexEntry {
            run_id: run_id_of_bytes(&bytes),
            file_name: name,
            path,
            created,
            duration: last - first,
            summary: ScenarioSummary {
                area_width: c.area.width,
                area_height: c.area.height,
                target_position: c.target_position,
                visibility: c.visibility,
                light_level: c.light_level,
                uav_count: c.uavs.len(),
            },
            outcome: log.outcome,
        };
        found.push((entry, log));
    }
    found.sort_by(|a, b| a.0.created.total_cmp(&b.0.created).then_with(|| a.0.run_id.cmp(&b.0.run_id)));
    let mut seen = std::collections::HashSet::new();
    found.retain(|(e, _)| {
        let fresh = seen.insert(e.run_id.clone());
        if !fresh {
            warnings.push(format!("skipping {}: duplicate of run {}", e.file_name, e.run_id));
        }
        fresh
    });
    Ok((found, warnings))
}
