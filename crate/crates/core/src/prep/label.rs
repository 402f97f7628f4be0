use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorState, Trigger};
use crate::geometry::Vec2;
use crate::prep::merge::TIME_EPS;
use crate::prep::{derive_features, AlignedFrame, FeatureSet, FeatureVector, PrepError, DEFAULT_WINDOW};
use crate::runlog::RunLog;

/// Features plus truth for one UAV at one tick. Keeps the raw
/// kinematic context the trigger inference and comparator need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub time: f64,
    pub uav_id: u32,
    pub features: FeatureVector,
    pub position: Vec2,
    pub heading: f64,
    pub battery: f64,
    pub truth_state: BehaviorState,
    /// State changes in (previous tick, this tick].
    pub triggers: Vec<Trigger>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance<L> {
    pub time: f64,
    pub uav_id: u32,
    pub features: FeatureVector,
    pub label: L,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrames {
    pub states: Vec<LabeledInstance<BehaviorState>>,
    pub transitions: Vec<LabeledInstance<Trigger>>,
}

fn check_frames(log: &RunLog, frames: &[AlignedFrame]) -> Result<(), PrepError> {
    let ids = log.uav_ids();
    let (first, last) = log.time_span().ok_or(PrepError::EmptyLog)?;
    for f in frames {
        if f.time < first - TIME_EPS || f.time > last + TIME_EPS {
            return Err(PrepError::MismatchedLog(format!("frame at t={} outside [{first}, {last}]", f.time)));
        }
        if let Some(s) = f.uavs.iter().find(|s| !ids.contains(&s.uav_id)) {
            return Err(PrepError::MismatchedLog(format!("uav {} not in log", s.uav_id)));
        }
        for s in &f.uavs {
            if let Some(t) = &s.telemetry {
                if t.uav_id != s.uav_id || t.time > f.time + TIME_EPS {
                    return Err(PrepError::MismatchedLog(format!("slot for uav {} at t={}", s.uav_id, f.time)));
                }
            }
        }
    }
    Ok(())
}

/// One sample per UAV per tick once a full window of telemetry exists.
/// Ordered by UAV id, then time.
pub fn extract_samples(
    log: &RunLog,
    frames: &[AlignedFrame],
    window: usize,
    set: &FeatureSet,
) -> Result<Vec<FrameSample>, PrepError> {
    if window < 2 {
        return Err(PrepError::WindowTooShort(window));
    }
    check_frames(log, frames)?;
    let mut out = Vec::new();
    for id in log.uav_ids() {
        let changes: Vec<_> = log.state_changes_for(id).collect();
        let mut state = BehaviorState::Hold;
        let mut next_change = 0;
        let mut prev_time = f64::NEG_INFINITY;
        for k in 0..frames.len() {
            let t = frames[k].time;
            let mut triggers = Vec::new();
            while next_change < changes.len() && changes[next_change].0 <= t + TIME_EPS {
                let (ct, s, trig) = changes[next_change];
                if ct > prev_time + TIME_EPS {
                    triggers.push(trig);
                }
                state = s;
                next_change += 1;
            }
            prev_time = t;
            if k + 1 < window {
                continue;
            }
            let w = &frames[k + 1 - window..=k];
            let features = match derive_features(w, id, &log.config.area, set) {
                Ok(v) => v,
                Err(PrepError::MissingTelemetry { .. }) => continue,
                Err(e) => return Err(e),
            };
            let tel = frames[k].slot(id).and_then(|s| s.telemetry.as_ref()).expect("checked by derive_features");
            out.push(FrameSample {
                time: t,
                uav_id: id,
                features,
                position: tel.position(),
                heading: tel.heading,
                battery: tel.battery,
                truth_state: state,
                triggers,
            });
        }
    }
    Ok(out)
}

/// State labels for every sample and transition labels at ticks where a
/// state change happened, using the default window and feature set.
/// Features are raw; normalization is fitted later on the training split.
pub fn label_frames(log: &RunLog, frames: &[AlignedFrame]) -> Result<LabeledFrames, PrepError> {
    let samples = extract_samples(log, frames, DEFAULT_WINDOW, &FeatureSet::default())?;
    let mut out = LabeledFrames::default();
    for s in samples {
        for &trig in &s.triggers {
            out.transitions.push(LabeledInstance { time: s.time, uav_id: s.uav_id, features: s.features.clone(), label: trig });
        }
        out.states.push(LabeledInstance { time: s.time, uav_id: s.uav_id, features: s.features, label: s.truth_state });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prep::merge_streams;
    use crate::runlog::EventKind;
    use crate::scenario::ScenarioConfig;
    use crate::sim::simulate;

    fn nominal() -> (RunLog, Vec<AlignedFrame>) {
        let log = simulate(&ScenarioConfig::default()).unwrap();
        let frames = merge_streams(&log, 2.0).unwrap();
        (log, frames)
    }

    fn change_time(log: &RunLog, uav: u32, trigger: Trigger) -> Option<f64> {
        log.state_changes_for(uav).find(|c| c.2 == trigger).map(|c| c.0)
    }

    #[test]
    fn hold_before_launch_then_search() {
        let (log, frames) = nominal();
        let labeled = label_frames(&log, &frames).unwrap();
        let launch = change_time(&log, 0, Trigger::GoForLaunch).unwrap();
        let first = labeled.states.iter().find(|s| s.uav_id == 0).unwrap();
        assert!(first.time < launch);
        assert_eq!(first.label, BehaviorState::Hold);
        let search = change_time(&log, 0, Trigger::FirstSearchWaypointReached).unwrap();
        let mid = labeled.states.iter().find(|s| s.uav_id == 0 && s.time > search + 5.0).unwrap();
        assert_eq!(mid.label, BehaviorState::FlySearchPattern);
    }

    #[test]
    fn every_state_change_yields_one_transition_instance() {
        let (log, frames) = nominal();
        let labeled = label_frames(&log, &frames).unwrap();
        let n_changes = log.events.iter().filter(|e| matches!(e.kind, EventKind::StateChange { .. })).count();
        assert_eq!(labeled.transitions.len(), n_changes);
        for tr in &labeled.transitions {
            let t = change_time(&log, tr.uav_id, tr.label).unwrap();
            assert!(t <= tr.time + 1e-9 && tr.time - t < 0.5 + 1e-9);
        }
    }

    #[test]
    fn survey_win_tick_is_labeled() {
        let mut config = ScenarioConfig::default();
        config.detection_base_prob = 1.0;
        config.visibility = 1.0;
        config.light_level = 1.0;
        config.confidence_threshold = 0.0;
        let log = simulate(&config).unwrap();
        let frames = merge_streams(&log, 2.0).unwrap();
        let labeled = label_frames(&log, &frames).unwrap();
        let won = labeled.transitions.iter().find(|t| t.label == Trigger::PotentialTargetFoundAuctionWon);
        assert!(won.is_some());
    }

    #[test]
    fn foreign_frames_rejected() {
        let (log, mut frames) = nominal();
        frames[0].uavs[0].uav_id = 42;
        assert!(matches!(label_frames(&log, &frames), Err(PrepError::MismatchedLog(_))));
        let (log, mut frames) = nominal();
        frames.last_mut().unwrap().time += 100.0;
        assert!(matches!(label_frames(&log, &frames), Err(PrepError::MismatchedLog(_))));
    }

    #[test]
    fn samples_ordered_by_uav_then_time() {
        let (log, frames) = nominal();
        let s = extract_samples(&log, &frames, 3, &FeatureSet::default()).unwrap();
        for w in s.windows(2) {
            assert!((w[0].uav_id, w[0].time) < (w[1].uav_id, w[1].time));
        }
    }
}
