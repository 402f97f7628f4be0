//! The four-state behavior machine and its eleven transition triggers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BehaviorState {
    Hold,
    FlyOrbitAndObserve,
    FlySearchPattern,
    SurveyTarget,
}

impl BehaviorState {
    pub const ALL: [BehaviorState; 4] = [
        BehaviorState::Hold,
        BehaviorState::FlyOrbitAndObserve,
        BehaviorState::FlySearchPattern,
        BehaviorState::SurveyTarget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BehaviorState::Hold => "Hold",
            BehaviorState::FlyOrbitAndObserve => "FlyOrbitAndObserve",
            BehaviorState::FlySearchPattern => "FlySearchPattern",
            BehaviorState::SurveyTarget => "SurveyTarget",
        }
    }

    /// Position in [`BehaviorState::ALL`]; used for confusion matrices.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Triggers that leave (or loop on) this state.
    pub fn outgoing(self) -> impl Iterator<Item = Trigger> {
        TRANSITIONS
            .iter()
            .filter(move |t| t.from == self)
            .map(|t| t.trigger)
    }
}

impl fmt::Display for BehaviorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BehaviorState {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BehaviorState::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Trigger {
    GoForLaunch,
    FirstSearchWaypointReached,
    LandingComplete,
    PotentialTargetFoundAuctionWon,
    PotentialTargetFoundAuctionLost,
    SearchTimeoutReached,
    SearchComplete,
    BatteryLow,
    AbortMission,
    SurveyComplete,
    PotentialTargetLost,
}

impl Trigger {
    pub const ALL: [Trigger; 11] = [
        Trigger::GoForLaunch,
        Trigger::FirstSearchWaypointReached,
        Trigger::LandingComplete,
        Trigger::PotentialTargetFoundAuctionWon,
        Trigger::PotentialTargetFoundAuctionLost,
        Trigger::SearchTimeoutReached,
        Trigger::SearchComplete,
        Trigger::BatteryLow,
        Trigger::AbortMission,
        Trigger::SurveyComplete,
        Trigger::PotentialTargetLost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Trigger::GoForLaunch => "GoForLaunch",
            Trigger::FirstSearchWaypointReached => "FirstSearchWaypointReached",
            Trigger::LandingComplete => "LandingComplete",
            Trigger::PotentialTargetFoundAuctionWon => "PotentialTargetFoundAuctionWon",
            Trigger::PotentialTargetFoundAuctionLost => "PotentialTargetFoundAuctionLost",
            Trigger::SearchTimeoutReached => "SearchTimeoutReached",
            Trigger::SearchComplete => "SearchComplete",
            Trigger::BatteryLow => "BatteryLow",
            Trigger::AbortMission => "AbortMission",
            Trigger::SurveyComplete => "SurveyComplete",
            Trigger::PotentialTargetLost => "PotentialTargetLost",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Trigger {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Trigger::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown name {0:?}")]
pub struct UnknownName(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: BehaviorState,
    pub trigger: Trigger,
    pub to: BehaviorState,
}

const fn edge(from: BehaviorState, trigger: Trigger, to: BehaviorState) -> Transition {
    Transition { from, trigger, to }
}

use BehaviorState::{FlyOrbitAndObserve as Orbit, FlySearchPattern as Search, Hold, SurveyTarget as Survey};

/// Every legal (state, trigger) pair. The auction-lost row has no listed
/// destination and is read as a self-loop on the search state.
pub const TRANSITIONS: [Transition; 13] = [
    edge(Hold, Trigger::GoForLaunch, Orbit),
    edge(Orbit, Trigger::FirstSearchWaypointReached, Search),
    edge(Orbit, Trigger::LandingComplete, Hold),
    edge(Search, Trigger::PotentialTargetFoundAuctionWon, Survey),
    edge(Search, Trigger::SearchTimeoutReached, Orbit),
    edge(Search, Trigger::SearchComplete, Orbit),
    edge(Search, Trigger::BatteryLow, Orbit),
    edge(Search, Trigger::AbortMission, Orbit),
    edge(Search, Trigger::PotentialTargetFoundAuctionLost, Search),
    edge(Survey, Trigger::SurveyComplete, Orbit),
    edge(Survey, Trigger::BatteryLow, Orbit),
    edge(Survey, Trigger::AbortMission, Orbit),
    edge(Survey, Trigger::PotentialTargetLost, Search),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid transition: {trigger} does not apply in state {state}")]
pub struct InvalidTransition {
    pub state: BehaviorState,
    pub trigger: Trigger,
}

pub fn behavior_transition(
    state: BehaviorState,
    trigger: Trigger,
) -> Result<BehaviorState, InvalidTransition> {
    TRANSITIONS
        .iter()
        .find(|t| t.from == state && t.trigger == trigger)
        .map(|t| t.to)
        .ok_or(InvalidTransition { state, trigger })
}

/// All triggers that move `from` to `to`.
pub fn triggers_between(from: BehaviorState, to: BehaviorState) -> Vec<Trigger> {
    TRANSITIONS
        .iter()
        .filter(|t| t.from == from && t.to == to)
        .map(|t| t.trigger)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        assert_eq!(behavior_transition(Hold, Trigger::GoForLaunch), Ok(Orbit));
        assert_eq!(
            behavior_transition(Search, Trigger::PotentialTargetFoundAuctionWon),
            Ok(Survey)
        );
        assert_eq!(behavior_transition(Survey, Trigger::PotentialTargetLost), Ok(Search));
        assert_eq!(
            behavior_transition(Hold, Trigger::SurveyComplete),
            Err(InvalidTransition { state: Hold, trigger: Trigger::SurveyComplete })
        );
        assert_eq!(
            behavior_transition(Search, Trigger::PotentialTargetFoundAuctionLost),
            Ok(Search)
        );
    }

    #[test]
    fn exhaustive_sweep_has_thirteen_legal_pairs() {
        let legal = BehaviorState::ALL
            .iter()
            .flat_map(|&s| Trigger::ALL.iter().map(move |&t| (s, t)))
            .filter(|&(s, t)| behavior_transition(s, t).is_ok())
            .count();
        assert_eq!(legal, 13);
        assert_eq!(triggers_between(Search, Orbit).len(), 4);
        assert_eq!(triggers_between(Survey, Orbit).len(), 3);
    }

    #[test]
    fn names_round_trip() {
        for s in BehaviorState::ALL {
            assert_eq!(s.name().parse::<BehaviorState>().unwrap(), s);
        }
        for t in Trigger::ALL {
            assert_eq!(t.name().parse::<Trigger>().unwrap(), t);
        }
        assert!("Landing".parse::<Trigger>().is_err());
    }

    #[test]
    fn outgoing_edges() {
        assert_eq!(Hold.outgoing().collect::<Vec<_>>(), vec![Trigger::GoForLaunch]);
        assert_eq!(Search.outgoing().count(), 6);
        assert_eq!(Survey.outgoing().count(), 4);
        assert_eq!(Orbit.outgoing().count(), 2);
    }
}
