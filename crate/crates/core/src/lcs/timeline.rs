use serde::{Deserialize, Serialize};

use crate::behavior::{triggers_between, BehaviorState, Trigger};
use crate::lcs::predict::predict_or_majority;
use crate::lcs::{search_end_features, LcsError, Population, SearchEndClassifier};
use crate::prep::{apply_normalization, FrameSample};
use crate::scenario::ScenarioConfig;

/// Mission knowledge available to the tester: the scenario plan (battery
/// threshold, scripted abort time, search area and timeout) and an
/// optional trained search-end classifier.
#[derive(Debug, Clone, Copy)]
pub struct TimelineContext<'a> {
    pub config: &'a ScenarioConfig,
    pub search_end: Option<&'a SearchEndClassifier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredChange {
    pub tick: usize,
    pub time: f64,
    pub from: BehaviorState,
    pub to: BehaviorState,
    /// `None` for an illegal jump.
    pub trigger: Option<Trigger>,
    pub illegal_jump: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTimeline {
    pub uav_id: u32,
    pub times: Vec<f64>,
    pub states: Vec<BehaviorState>,
    pub changes: Vec<InferredChange>,
}

/// Per-vehicle predicted state sequence and the trigger inferred at each
/// change. `samples` are ordered by vehicle then time, as produced by
/// `prep::extract_samples`; their features are raw and are normalized with
/// the population's stats when present.
pub fn infer_state_timeline(
    pop: &Population,
    samples: &[FrameSample],
    ctx: TimelineContext<'_>,
) -> Result<Vec<StateTimeline>, LcsError> {
    let arity = pop.arity().ok_or(LcsError::EmptyPopulation)?;
    let states: Vec<BehaviorState> = pop
        .labels
        .iter()
        .map(|l| l.parse().map_err(|_| LcsError::UnknownLabel(l.clone())))
        .collect::<Result<_, _>>()?;
    let mut votes = vec![0.0; pop.labels.len()];
    let mut out: Vec<StateTimeline> = Vec::new();
    for s in samples {
        let x = match &pop.normalization {
            Some(stats) => apply_normalization(&s.features, stats)
                .map_err(|_| LcsError::ArityMismatch { expected: arity, got: s.features.len() })?
                .0,
            None => s.features.0.clone(),
        };
        if x.len() != arity {
            return Err(LcsError::ArityMismatch { expected: arity, got: x.len() });
        }
        let state = states[predict_or_majority(pop, &x, &mut votes) as usize];
        if out.last().is_none_or(|t| t.uav_id != s.uav_id) {
            out.push(StateTimeline { uav_id: s.uav_id, times: Vec::new(), states: Vec::new(), changes: Vec::new() });
        }
        let tl = out.last_mut().unwrap();
        if let Some(&from) = tl.states.last() {
            if from != state {
                let tick = tl.states.len();
                let search_start = tl
                    .changes
                    .iter()
                    .find(|c| c.to == BehaviorState::FlySearchPattern)
                    .map_or(tl.times[0], |c| c.time);
                let trigger = resolve_trigger(from, state, s, search_start, &ctx);
                tl.changes.push(InferredChange {
                    tick,
                    time: s.time,
                    from,
                    to: state,
                    trigger,
                    illegal_jump: trigger.is_none(),
                });
            }
        }
        tl.times.push(s.time);
        tl.states.push(state);
    }
    Ok(out)
}

fn resolve_trigger(
    from: BehaviorState,
    to: BehaviorState,
    s: &FrameSample,
    search_start: f64,
    ctx: &TimelineContext<'_>,
) -> Option<Trigger> {
    let candidates = triggers_between(from, to);
    match candidates.len() {
        0 => return None,
        1 => return Some(candidates[0]),
        _ => {}
    }
    let c = ctx.config;
    let pick = if c.abort_time_s.is_some_and(|a| s.time >= a) {
        Trigger::AbortMission
    } else if s.battery < c.battery_low_threshold {
        Trigger::BatteryLow
    } else if from == BehaviorState::FlySearchPattern {
        ctx.search_end
            .and_then(|m| {
                search_end_features(c, s.uav_id, search_start, s.time, s.position, s.heading)
                    .map(|f| m.classify(&f).trigger())
            })
            .unwrap_or(Trigger::SearchComplete)
    } else {
        Trigger::SurveyComplete
    };
    candidates.contains(&pick).then_some(pick).or(Some(candidates[0]))
}
