//! Inference versus truth: geolocation error, state timelines, trigger
//! lamps and FLS perception scores against detection outcomes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{BehaviorState, Trigger};
use crate::fls::{fls_inputs_for, FlsError, FlsSystem, PerceptionClass, PerceptionEstimate};
use crate::geometry::Vec2;
use crate::lcs::StateTimeline;
use crate::prep::FrameSample;
use crate::runlog::{ConfidenceClass, RunLog};

/// Inferred and truth triggers match when their ticks differ by at most this.
pub const TRIGGER_TOLERANCE_TICKS: usize = 2;

/// Rules listed per failed-detection run.
pub const DIGEST_SIZE: usize = 3;

const GRID_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("timelines are not on the same tick grid: {0}")]
    GridMismatch(String),
    #[error("no runs to report on")]
    EmptyInput,
    #[error(transparent)]
    Fls(#[from] FlsError),
}

pub fn geoloc_error(perceived: Vec2, truth: Vec2) -> f64 {
    perceived.distance(truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub time: f64,
    pub uav_id: u32,
    pub quantity: String,
    pub truth: Vec<f64>,
    pub perceived: Vec<f64>,
    pub error: f64,
    pub units: String,
}

/// One record per detection: perceived target position against the true one.
pub fn geoloc_records(log: &RunLog) -> Vec<ComparisonRecord> {
    let truth = log.config.target_position;
    log.detections()
        .map(|d| ComparisonRecord {
            time: d.time,
            uav_id: d.uav_id,
            quantity: "target_position".into(),
            truth: vec![truth.x, truth.y],
            perceived: vec![d.perceived_position.x, d.perceived_position.y],
            error: geoloc_error(d.perceived_position, truth),
            units: "m".into(),
        })
        .collect()
}

/// Truth channel of one vehicle on the prepared tick grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTimeline {
    pub uav_id: u32,
    pub times: Vec<f64>,
    pub states: Vec<BehaviorState>,
    /// State-change triggers in (previous tick, this tick].
    pub triggers: Vec<Vec<Trigger>>,
}

/// Splits samples (ordered by vehicle then time) into per-vehicle truth.
pub fn truth_timelines(samples: &[FrameSample]) -> Vec<TruthTimeline> {
    let mut out: Vec<TruthTimeline> = Vec::new();
    for s in samples {
        if out.last().is_none_or(|t| t.uav_id != s.uav_id) {
            out.push(TruthTimeline { uav_id: s.uav_id, times: vec![], states: vec![], triggers: vec![] });
        }
        let t = out.last_mut().expect("pushed");
        t.times.push(s.time);
        t.states.push(s.truth_state);
        t.triggers.push(s.triggers.clone());
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub total: u64,
    pub correct: u64,
}

impl Tally {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerMatch {
    pub tick: usize,
    pub time: f64,
    pub truth: Trigger,
    /// Inferred change matched to this truth change, if any.
    pub inferred: Option<Trigger>,
    pub inferred_tick: Option<usize>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IllegalJump {
    pub uav_id: u32,
    pub tick: usize,
    pub time: f64,
    pub from: BehaviorState,
    pub to: BehaviorState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateAccuracyReport {
    pub frames: u64,
    pub correct_frames: u64,
    pub accuracy: f64,
    /// `confusion[truth][inferred]`, indexed by `BehaviorState::index`.
    pub confusion: [[u64; 4]; 4],
    pub triggers: Tally,
    pub per_trigger: BTreeMap<String, Tally>,
    pub trigger_matches: Vec<TriggerMatch>,
    pub illegal_jumps: Vec<IllegalJump>,
}

impl StateAccuracyReport {
    fn empty() -> Self {
        Self {
            frames: 0,
            correct_frames: 0,
            accuracy: 0.0,
            confusion: [[0; 4]; 4],
            triggers: Tally::default(),
            per_trigger: BTreeMap::new(),
            trigger_matches: vec![],
            illegal_jumps: vec![],
        }
    }

    /// Pools several reports, e.g. all vehicles of a run or all runs.
    pub fn combine<'a>(reports: impl IntoIterator<Item = &'a StateAccuracyReport>) -> Self {
        let mut out = Self::empty();
        for r in reports {
            out.frames += r.frames;
            out.correct_frames += r.correct_frames;
            for (row, other) in out.confusion.iter_mut().zip(&r.confusion) {
                for (c, o) in row.iter_mut().zip(other) {
                    *c += o;
                }
            }
            out.triggers.total += r.triggers.total;
            out.triggers.correct += r.triggers.correct;
            for (k, t) in &r.per_trigger {
                let e = out.per_trigger.entry(k.clone()).or_default();
                e.total += t.total;
                e.correct += t.correct;
            }
            out.trigger_matches.extend(r.trigger_matches.iter().cloned());
            out.illegal_jumps.extend(r.illegal_jumps.iter().cloned());
        }
        out.accuracy = if out.frames > 0 { out.correct_frames as f64 / out.frames as f64 } else { 0.0 };
        out
    }
}

/// Per-frame and per-change comparison of one vehicle's inferred timeline
/// with its truth. Truth change points are ticks where the state differs
/// from the previous tick; the last trigger logged in that interval is the
/// truth trigger. Each is matched to at most one inferred change with the
/// same trigger within [`TRIGGER_TOLERANCE_TICKS`].
pub fn compare_states(inferred: &StateTimeline, truth: &TruthTimeline) -> Result<StateAccuracyReport, CompareError> {
    if inferred.uav_id != truth.uav_id {
        return Err(CompareError::GridMismatch(format!("uav {} vs uav {}", inferred.uav_id, truth.uav_id)));
    }
    if inferred.times.len() != truth.times.len()
        || inferred.states.len() != inferred.times.len()
        || truth.states.len() != truth.times.len()
    {
        return Err(CompareError::GridMismatch(format!(
            "{} inferred ticks vs {} truth ticks",
            inferred.times.len(),
            truth.times.len()
        )));
    }
    if let Some(k) = inferred.times.iter().zip(&truth.times).position(|(a, b)| (a - b).abs() > GRID_EPS) {
        return Err(CompareError::GridMismatch(format!(
            "tick {k}: {} vs {}",
            inferred.times[k], truth.times[k]
        )));
    }
    let mut r = StateAccuracyReport::empty();
    for (&i, &t) in inferred.states.iter().zip(&truth.states) {
        r.frames += 1;
        r.confusion[t.index()][i.index()] += 1;
        if i == t {
            r.correct_frames += 1;
        }
    }
    r.accuracy = if r.frames > 0 { r.correct_frames as f64 / r.frames as f64 } else { 0.0 };

    let mut used = vec![false; inferred.changes.len()];
    for k in 1..truth.states.len() {
        if truth.states[k] == truth.states[k - 1] {
            continue;
        }
        let Some(&want) = truth.triggers[k].last() else { continue };
        let hit = inferred.changes.iter().enumerate().find(|(j, c)| {
            !used[*j] && c.tick.abs_diff(k) <= TRIGGER_TOLERANCE_TICKS && c.trigger == Some(want)
        });
        let (inferred_trigger, inferred_tick, correct) = match hit {
            Some((j, c)) => {
                used[j] = true;
                (c.trigger, Some(c.tick), true)
            }
            None => {
                let near = inferred
                    .changes
                    .iter()
                    .enumerate()
                    .filter(|(j, c)| !used[*j] && c.tick.abs_diff(k) <= TRIGGER_TOLERANCE_TICKS)
                    .min_by_key(|(_, c)| c.tick.abs_diff(k));
                (near.and_then(|(_, c)| c.trigger), near.map(|(_, c)| c.tick), false)
            }
        };
        r.triggers.total += 1;
        let e = r.per_trigger.entry(want.name().to_string()).or_default();
        e.total += 1;
        if correct {
            r.triggers.correct += 1;
            e.correct += 1;
        }
        r.trigger_matches.push(TriggerMatch {
            tick: k,
            time: truth.times[k],
            truth: want,
            inferred: inferred_trigger,
            inferred_tick,
            correct,
        });
    }
    r.illegal_jumps = inferred
        .changes
        .iter()
        .filter(|c| c.illegal_jump)
        .map(|c| IllegalJump { uav_id: inferred.uav_id, tick: c.tick, time: c.time, from: c.from, to: c.to })
        .collect();
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriggerStatus {
    Inactive,
    Armed,
    Fired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerLamp {
    pub trigger: Trigger,
    pub status: TriggerStatus,
}

/// Lamps for all triggers in `Trigger::ALL` order: outgoing edges of the
/// inferred state are Armed, the trigger inferred on this tick is Fired.
pub fn trigger_status(state: BehaviorState, fired: Option<Trigger>) -> Vec<TriggerLamp> {
    Trigger::ALL
        .iter()
        .map(|&trigger| {
            let status = if fired == Some(trigger) {
                TriggerStatus::Fired
            } else if state.outgoing().any(|t| t == trigger) {
                TriggerStatus::Armed
            } else {
                TriggerStatus::Inactive
            };
            TriggerLamp { trigger, status }
        })
        .collect()
}

/// Lamps for every tick of an inferred timeline.
pub fn timeline_lamps(timeline: &StateTimeline) -> Vec<Vec<TriggerLamp>> {
    let mut fired: Vec<Option<Trigger>> = vec![None; timeline.states.len()];
    for c in &timeline.changes {
        if let Some(slot) = fired.get_mut(c.tick) {
            *slot = c.trigger;
        }
    }
    timeline.states.iter().zip(fired).map(|(&s, f)| trigger_status(s, f)).collect()
}

/// True when any detection reached the high-confidence class.
pub fn target_detected(log: &RunLog) -> bool {
    log.detections().any(|d| d.confidence_class == ConfidenceClass::High)
}

/// Search altitude averaged over the fleet.
pub fn mean_search_altitude(log: &RunLog) -> f64 {
    let uavs = &log.config.uavs;
    if uavs.is_empty() {
        return 0.0;
    }
    uavs.iter().map(|u| u.altitude).sum::<f64>() / uavs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlsRun {
    pub run_id: String,
    pub inputs: Vec<f64>,
    pub estimate: PerceptionEstimate,
    pub detected: bool,
}

/// Scores a run's scenario conditions at the fleet's mean search altitude.
pub fn fls_run(run_id: &str, log: &RunLog, system: &FlsSystem) -> Result<FlsRun, CompareError> {
    let inputs = fls_inputs_for(&log.config, mean_search_altitude(log)).to_vec();
    let estimate = system.infer(&inputs)?;
    Ok(FlsRun { run_id: run_id.to_string(), inputs, estimate, detected: target_detected(log) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub run_id: String,
    pub score: f64,
    pub class: PerceptionClass,
    pub no_firing: bool,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDigest {
    pub rule: usize,
    pub antecedent: Vec<String>,
    pub consequent: String,
    pub firing_lower: f64,
    pub firing_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureDigest {
    pub run_id: String,
    pub score: f64,
    pub inputs: Vec<f64>,
    pub rules: Vec<RuleDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionScoreReport {
    pub runs: Vec<RunScore>,
    pub detected_count: usize,
    pub undetected_count: usize,
    /// Absent when the group is empty. No-firing runs are excluded.
    pub detected_mean: Option<f64>,
    pub undetected_mean: Option<f64>,
    pub failures: Vec<FailureDigest>,
}

pub fn fls_report(runs: &[FlsRun]) -> Result<PerceptionScoreReport, CompareError> {
    if runs.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let mean = |detected: bool| {
        let scores: Vec<f64> =
            runs.iter().filter(|r| r.detected == detected && !r.estimate.no_firing).map(|r| r.estimate.score).collect();
        (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
    };
    let failures = runs
        .iter()
        .filter(|r| !r.detected)
        .map(|r| {
            let mut acts: Vec<_> = r.estimate.activations.iter().filter(|a| a.firing.upper > 0.0).collect();
            acts.sort_by(|a, b| {
                b.firing.upper.total_cmp(&a.firing.upper).then(b.firing.lower.total_cmp(&a.firing.lower)).then(a.rule.cmp(&b.rule))
            });
            FailureDigest {
                run_id: r.run_id.clone(),
                score: r.estimate.score,
                inputs: r.inputs.clone(),
                rules: acts
                    .into_iter()
                    .take(DIGEST_SIZE)
                    .map(|a| RuleDigest {
                        rule: a.rule,
                        antecedent: a.antecedent.clone(),
                        consequent: a.consequent.clone(),
                        firing_lower: a.firing.lower,
                        firing_upper: a.firing.upper,
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(PerceptionScoreReport {
        runs: runs
            .iter()
            .map(|r| RunScore {
                run_id: r.run_id.clone(),
                score: r.estimate.score,
                class: r.estimate.class,
                no_firing: r.estimate.no_firing,
                detected: r.detected,
            })
            .collect(),
        detected_count: runs.iter().filter(|r| r.detected).count(),
        undetected_count: runs.iter().filter(|r| !r.detected).count(),
        detected_mean: mean(true),
        undetected_mean: mean(false),
        failures,
    })
}
