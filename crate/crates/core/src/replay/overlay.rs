use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behavior::{BehaviorState, Trigger};
use crate::compare::{
    compare_states, fls_run, geoloc_error, geoloc_records, timeline_lamps, trigger_status, truth_timelines,
    ComparisonRecord, FlsRun, StateAccuracyReport, TriggerLamp,
};
use crate::fls::{fls_inputs_for, FlsSystem, PerceptionClass};
use crate::lcs::{infer_state_timeline, write_population_to, Population, SearchEndClassifier, TimelineContext};
use crate::pipeline::PrepConfig;
use crate::prep::{extract_samples, merge_streams, FeatureSet};
use crate::replay::ReplayError;
use crate::runlog::{Detection, RunLog, TelemetryRecord};

/// Everything an overlay depends on besides the log itself.
#[derive(Debug, Clone, Default)]
pub struct ReplayModels {
    pub prep: PrepConfig,
    /// Without a population frames carry no inferred state.
    pub population: Option<Population>,
    pub search_end: Option<SearchEndClassifier>,
    pub fls: FlsSystem,
}

impl ReplayModels {
    /// Hash of the serialized models; a cached overlay is reused only when
    /// this matches.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&(self.prep.tick_hz, self.prep.window)).expect("serializable"));
        if let Some(p) = &self.population {
            let mut buf = Vec::new();
            write_population_to(&mut buf, p, None).expect("writing to a Vec cannot fail");
            h.update(&buf);
        }
        h.update(serde_json::to_vec(&self.search_end).expect("serializable"));
        h.update(serde_json::to_vec(&self.fls).expect("serializable"));
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedUav {
    pub uav_id: u32,
    pub telemetry: Option<TelemetryRecord>,
    pub detection: Option<Detection>,
    pub truth_state: BehaviorState,
    pub inferred_state: Option<BehaviorState>,
    /// Trigger inferred on this tick.
    pub fired: Option<Trigger>,
    pub illegal_jump: bool,
    /// One lamp per trigger, `Trigger::ALL` order.
    pub triggers: Vec<TriggerLamp>,
    pub fls_score: Option<f64>,
    pub fls_class: Option<PerceptionClass>,
    pub fls_no_firing: bool,
    pub geoloc: Option<ComparisonRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedFrame {
    pub time: f64,
    pub visibility: f64,
    pub light_level: f64,
    pub camera_fov_deg: f64,
    pub uavs: Vec<EnrichedUav>,
}

/// Whole-run comparison served next to the frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// All vehicles pooled; absent without a population.
    pub state: Option<StateAccuracyReport>,
    pub perception: FlsRun,
    pub geoloc: Vec<ComparisonRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOverlay {
    pub format_version: String,
    pub run_id: String,
    pub models_fingerprint: String,
    pub tick_hz: f64,
    pub report: RunReport,
    pub frames: Vec<EnrichedFrame>,
}

const TIME_EPS: f64 = 1e-9;

impl RunOverlay {
    pub fn frames_between(&self, from: f64, to: f64) -> &[EnrichedFrame] {
        let lo = self.frames.partition_point(|f| f.time < from - TIME_EPS);
        let hi = self.frames.partition_point(|f| f.time <= to + TIME_EPS);
        &self.frames[lo..hi.max(lo)]
    }

    /// Index of the frame nearest to `t`, clamped to the run.
    pub fn nearest(&self, t: f64) -> Option<usize> {
        let first = self.frames.first()?.time;
        let k = ((t - first) * self.tick_hz).round();
        Some(k.clamp(0.0, (self.frames.len() - 1) as f64) as usize)
    }
}

pub fn overlay_path(log_path: &Path) -> PathBuf {
    let mut name = log_path.file_name().unwrap_or_default().to_os_string();
    name.push(".overlay.json");
    log_path.with_file_name(name)
}

fn truth_state_at(changes: &[(f64, BehaviorState)], t: f64) -> BehaviorState {
    let n = changes.partition_point(|c| c.0 <= t + TIME_EPS);
    n.checked_sub(1).map_or(BehaviorState::Hold, |i| changes[i].1)
}

fn overlay_err(run_id: &str, e: impl std::fmt::Display) -> ReplayError {
    ReplayError::Overlay { run_id: run_id.into(), message: e.to_string() }
}

pub fn build_overlay(run_id: &str, log: &RunLog, models: &ReplayModels) -> Result<RunOverlay, ReplayError> {
    let tick_hz = models.prep.tick_hz;
    let frames = merge_streams(log, tick_hz).map_err(|e| overlay_err(run_id, e))?;
    let first = frames.first().map_or(0.0, |f| f.time);
    let tick_of = |t: f64| ((t - first) * tick_hz).round() as usize;

    // (uav, tick) -> (state, fired, illegal)
    let mut inferred: HashMap<(u32, usize), (BehaviorState, Option<Trigger>, bool, Vec<TriggerLamp>)> = HashMap::new();
    let mut state_report = None;
    if let Some(pop) = &models.population {
        let set = FeatureSet::from_names(&pop.feature_names).map_err(|e| overlay_err(run_id, e))?;
        let samples = extract_samples(log, &frames, models.prep.window, &set).map_err(|e| overlay_err(run_id, e))?;
        let ctx = TimelineContext { config: &log.config, search_end: models.search_end.as_ref() };
        let timelines = infer_state_timeline(pop, &samples, ctx).map_err(|e| overlay_err(run_id, e))?;
        let per_uav = timelines
            .iter()
            .zip(truth_timelines(&samples))
            .map(|(inf, truth)| compare_states(inf, &truth))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| overlay_err(run_id, e))?;
        state_report = Some(StateAccuracyReport::combine(&per_uav));
        for tl in &timelines {
            let lamps = timeline_lamps(tl);
            let mut fired: Vec<(Option<Trigger>, bool)> = vec![(None, false); tl.states.len()];
            for c in &tl.changes {
                fired[c.tick] = (c.trigger, c.illegal_jump);
            }
            for (k, ((&t, &s), l)) in tl.times.iter().zip(&tl.states).zip(lamps).enumerate() {
                inferred.insert((tl.uav_id, tick_of(t)), (s, fired[k].0, fired[k].1, l));
            }
        }
    }

    let truth_changes: HashMap<u32, Vec<(f64, BehaviorState)>> = log
        .uav_ids()
        .into_iter()
        .map(|id| {
            let mut v: Vec<_> = log.state_changes_for(id).map(|(t, s, _)| (t, s)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            (id, v)
        })
        .collect();
    let target = log.config.target_position;
    let dark = trigger_status(BehaviorState::Hold, None)
        .into_iter()
        .map(|l| TriggerLamp { status: crate::compare::TriggerStatus::Inactive, ..l })
        .collect::<Vec<_>>();

    let out = frames
        .iter()
        .enumerate()
        .map(|(k, f)| EnrichedFrame {
            time: f.time,
            visibility: f.visibility,
            light_level: f.light_level,
            camera_fov_deg: f.camera_fov_deg,
            uavs: f
                .uavs
                .iter()
                .map(|slot| {
                    let inf = inferred.get(&(slot.uav_id, k));
                    let est = slot
                        .telemetry
                        .as_ref()
                        .and_then(|t| models.fls.infer(&fls_inputs_for(&log.config, t.altitude)).ok());
                    EnrichedUav {
                        uav_id: slot.uav_id,
                        telemetry: slot.telemetry.clone(),
                        detection: slot.detection.clone(),
                        truth_state: truth_state_at(&truth_changes[&slot.uav_id], f.time),
                        inferred_state: inf.map(|i| i.0),
                        fired: inf.and_then(|i| i.1),
                        illegal_jump: inf.is_some_and(|i| i.2),
                        triggers: inf.map_or_else(|| dark.clone(), |i| i.3.clone()),
                        fls_score: est.as_ref().map(|e| e.score),
                        fls_class: est.as_ref().map(|e| e.class),
                        fls_no_firing: est.as_ref().is_some_and(|e| e.no_firing),
                        geoloc: slot.detection.as_ref().map(|d| ComparisonRecord {
                            time: d.time,
                            uav_id: d.uav_id,
                            quantity: "target_position".into(),
                            truth: vec![target.x, target.y],
                            perceived: vec![d.perceived_position.x, d.perceived_position.y],
                            error: geoloc_error(d.perceived_position, target),
                            units: "m".into(),
                        }),
                    }
                })
                .collect(),
        })
        .collect();
    let report = RunReport {
        state: state_report,
        perception: fls_run(run_id, log, &models.fls).map_err(|e| overlay_err(run_id, e))?,
        geoloc: geoloc_records(log),
    };
    Ok(RunOverlay {
        format_version: crate::FORMAT_VERSION.into(),
        run_id: run_id.into(),
        models_fingerprint: models.fingerprint(),
        tick_hz,
        report,
        frames: out,
    })
}

/// Reuses the cached overlay beside the log when it matches the run and
/// the models, otherwise builds and caches a fresh one. A cache that
/// cannot be written is not an error.
pub(crate) fn load_or_build(log_path: &Path, run_id: &str, log: &RunLog, models: &ReplayModels) -> Result<RunOverlay, ReplayError> {
    let cache = overlay_path(log_path);
    let fingerprint = models.fingerprint();
    if let Ok(bytes) = std::fs::read(&cache) {
        if let Ok(o) = serde_json::from_slice::<RunOverlay>(&bytes) {
            if o.run_id == run_id
                && o.models_fingerprint == fingerprint
                && crate::check_format_version(&o.format_version).is_ok()
            {
                return Ok(o);
            }
        }
    }
    let o = build_overlay(run_id, log, models)?;
    match serde_json::to_vec(&o) {
        Ok(bytes) => {
            if let Err(e) = std::fs::write(&cache, bytes) {
                tracing::warn!("cannot cache overlay {}: {e}", cache.display());
            }
        }
        Err(e) => tracing::warn!("cannot serialize overlay for {run_id}: {e}"),
    }
    Ok(o)
}
