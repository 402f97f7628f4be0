use serde::{Deserialize, Serialize};

use crate::behavior::Trigger;
use crate::geometry::Vec2;
use crate::lcs::LcsError;
use crate::runlog::RunLog;
use crate::scenario::ScenarioConfig;
use crate::sim::search_plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchEndLabel {
    Timeout,
    Complete,
}

impl SearchEndLabel {
    pub fn trigger(self) -> Trigger {
        match self {
            SearchEndLabel::Timeout => Trigger::SearchTimeoutReached,
            SearchEndLabel::Complete => Trigger::SearchComplete,
        }
    }

    pub fn from_trigger(t: Trigger) -> Option<Self> {
        match t {
            Trigger::SearchTimeoutReached => Some(SearchEndLabel::Timeout),
            Trigger::SearchComplete => Some(SearchEndLabel::Complete),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchEndFeatures {
    /// Elapsed search time over the configured timeout.
    pub time_ratio: f64,
    /// Fraction of the vehicle's lawnmower path flown.
    pub pass_fraction: f64,
    /// Cosine between the heading and the nearest leg's direction.
    pub heading_alignment: f64,
}

impl SearchEndFeatures {
    pub fn as_array(&self) -> [f64; 3] {
        [self.time_ratio, self.pass_fraction, self.heading_alignment]
    }
}

pub fn search_end_features(
    config: &ScenarioConfig,
    uav_id: u32,
    search_start: f64,
    end_time: f64,
    position: Vec2,
    heading_deg: f64,
) -> Option<SearchEndFeatures> {
    let plan = search_plan(config, uav_id)?;
    Some(SearchEndFeatures {
        time_ratio: (end_time - search_start) / config.search_timeout_s,
        pass_fraction: plan.progress_fraction(position),
        heading_alignment: Vec2::from_heading(heading_deg).dot(plan.leg_direction_at(position)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchEndExample {
    pub features: SearchEndFeatures,
    pub label: SearchEndLabel,
}

/// One example per vehicle whose search ended by timeout or completion,
/// with times and pose taken from the truth channel.
pub fn search_end_examples(log: &RunLog) -> Vec<SearchEndExample> {
    let mut out = Vec::new();
    for id in log.uav_ids() {
        let changes: Vec<_> = log.state_changes_for(id).collect();
        let Some(start) = changes.iter().find(|c| c.2 == Trigger::FirstSearchWaypointReached).map(|c| c.0) else {
            continue;
        };
        let Some((end, label)) = changes.iter().find_map(|c| SearchEndLabel::from_trigger(c.2).map(|l| (c.0, l))) else {
            continue;
        };
        let Some(pose) = log.telemetry_for(id).take_while(|r| r.time <= end).last() else { continue };
        if let Some(features) = search_end_features(&log.config, id, start, end, pose.position(), pose.heading) {
            out.push(SearchEndExample { features, label });
        }
    }
    out
}

/// Logistic model scoring the probability of `Complete`, behind two
/// guards the simulator's semantics force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEndClassifier {
    pub format_version: String,
    pub weights: [f64; 3],
    pub bias: f64,
}

const EPOCHS: usize = 4000;
const LEARNING_RATE: f64 = 2.0;
const L2: f64 = 1e-4;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl SearchEndClassifier {
    /// Full-batch gradient descent from zero weights; deterministic.
    pub fn fit(examples: &[SearchEndExample]) -> Result<Self, LcsError> {
        if examples.is_empty() {
            return Err(LcsError::EmptyDataset);
        }
        let n = examples.len() as f64;
        let (mut w, mut b) = ([0.0f64; 3], 0.0f64);
        for _ in 0..EPOCHS {
            let (mut gw, mut gb) = ([0.0f64; 3], 0.0f64);
            for e in examples {
                let x = e.features.as_array();
                let y = f64::from(u8::from(e.label == SearchEndLabel::Complete));
                let err = sigmoid(b + w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()) - y;
                for k in 0..3 {
                    gw[k] += err * x[k];
                }
                gb += err;
            }
            for k in 0..3 {
                w[k] -= LEARNING_RATE * (gw[k] / n + L2 * w[k]);
            }
            b -= LEARNING_RATE * gb / n;
        }
        Ok(Self { format_version: crate::FORMAT_VERSION.to_string(), weights: w, bias: b })
    }

    /// Probability of `Complete` under the logistic model alone.
    pub fn score(&self, f: &SearchEndFeatures) -> f64 {
        let x = f.as_array();
        sigmoid(self.bias + self.weights.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn classify(&self, f: &SearchEndFeatures) -> SearchEndLabel {
        if f.pass_fraction >= 1.0 {
            SearchEndLabel::Complete
        } else if f.time_ratio >= 1.0 {
            SearchEndLabel::Timeout
        } else if self.score(f) >= 0.5 {
            SearchEndLabel::Complete
        } else {
            SearchEndLabel::Timeout
        }
    }

    pub fn accuracy(&self, examples: &[SearchEndExample]) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        examples.iter().filter(|e| self.classify(&e.features) == e.label).count() as f64 / examples.len() as f64
    }
}
