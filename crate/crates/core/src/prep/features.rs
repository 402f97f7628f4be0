use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{Rect, Vec2};
use crate::prep::{AlignedFrame, PrepError};
use crate::runlog::TelemetryRecord;

/// Frames per feature window.
pub const DEFAULT_WINDOW: usize = 3;

/// Floor on squared speed in the turn feature.
const SPEED_SQ_EPS: f64 = 1e-6;

/// Named features. The derived `Speed` and `Turn` entries combine the
/// finite-difference ground velocities nonlinearly: speed magnitude and
/// `|v x a| / |v|^2`, which is the turn rate in rad/s on a circular arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feature {
    Airspeed,
    HeadingRate,
    Altitude,
    BoundaryDistance,
    Battery,
    Speed,
    Turn,
}

impl Feature {
    pub const ALL: [Feature; 7] = [
        Feature::Airspeed,
        Feature::HeadingRate,
        Feature::Altitude,
        Feature::BoundaryDistance,
        Feature::Battery,
        Feature::Speed,
        Feature::Turn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Airspeed => "airspeed",
            Feature::HeadingRate => "heading_rate",
            Feature::Altitude => "altitude",
            Feature::BoundaryDistance => "boundary_distance",
            Feature::Battery => "battery",
            Feature::Speed => "f_speed",
            Feature::Turn => "f_turn",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = PrepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| PrepError::Format(format!("unknown feature {s:?}")))
    }
}

/// Ordered selection of features; fixes arity and order across a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub features: Vec<Feature>,
}

impl Default for FeatureSet {
    fn default() -> Self {
        Self { features: Feature::ALL.to_vec() }
    }
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name().to_string()).collect()
    }

    pub fn position(&self, feature: Feature) -> Option<usize> {
        self.features.iter().position(|&f| f == feature)
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, PrepError> {
        let features = names.iter().map(|n| n.as_ref().parse()).collect::<Result<_, _>>()?;
        Ok(Self { features })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn telemetry_at(frame: &AlignedFrame, uav_id: u32) -> Result<&TelemetryRecord, PrepError> {
    frame
        .slot(uav_id)
        .and_then(|s| s.telemetry.as_ref())
        .ok_or(PrepError::MissingTelemetry { uav_id, time: frame.time })
}

/// Raw (unnormalized) features for `uav_id` at the last frame of `window`.
///
/// Velocity is the two-point difference of the last two positions;
/// acceleration uses the last three when available, otherwise zero.
pub fn derive_features(
    window: &[AlignedFrame],
    uav_id: u32,
    area: &Rect,
    set: &FeatureSet,
) -> Result<FeatureVector, PrepError> {
    if window.len() < 2 {
        return Err(PrepError::WindowTooShort(window.len()));
    }
    let n = window.len();
    let cur = telemetry_at(&window[n - 1], uav_id)?;
    let prev = telemetry_at(&window[n - 2], uav_id)?;
    let dt = window[n - 1].time - window[n - 2].time;
    let velocity = cur.position().sub(prev.position()).scale(1.0 / dt);
    let accel = if n >= 3 {
        let before = telemetry_at(&window[n - 3], uav_id)?;
        let dt0 = window[n - 2].time - window[n - 3].time;
        let v0 = prev.position().sub(before.position()).scale(1.0 / dt0);
        velocity.sub(v0).scale(1.0 / dt)
    } else {
        Vec2::default()
    };
    let speed = velocity.norm();
    let turn = (velocity.x * accel.y - velocity.y * accel.x).abs() / (speed * speed).max(SPEED_SQ_EPS);

    let values = set
        .features
        .iter()
        .map(|f| match f {
            Feature::Airspeed => cur.airspeed,
            Feature::HeadingRate => cur.heading_rate,
            Feature::Altitude => cur.altitude,
            Feature::BoundaryDistance => area.signed_boundary_distance(cur.position()),
            Feature::Battery => cur.battery,
            Feature::Speed => speed,
            Feature::Turn => turn,
        })
        .collect();
    Ok(FeatureVector(values))
}
