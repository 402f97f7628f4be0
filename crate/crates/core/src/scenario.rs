//! Scenario configuration for a simulated search mission.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rect, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavSpec {
    pub position: Vec2,
    /// Search altitude, meters.
    pub altitude: f64,
    /// Search airspeed, m/s.
    pub airspeed: f64,
    /// Initial battery fraction.
    pub battery: f64,
}

/// Guidance constants shared by every vehicle in a run.
///
/// Altitudes and airspeeds per behavior are expressed relative to the
/// vehicle's search values so that the four behaviors fly visibly
/// different profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionProfile {
    pub max_turn_rate_deg_s: f64,
    pub battery_drain_per_s: f64,
    pub climb_rate_m_s: f64,
    pub accel_m_s2: f64,
    pub launch_delay_s: f64,
    pub launch_stagger_s: f64,
    pub orbit_altitude_offset_m: f64,
    pub orbit_speed_factor: f64,
    pub orbit_radius_m: f64,
    pub orbit_duration_s: f64,
    pub survey_speed_factor: f64,
    pub survey_radius_m: f64,
    pub survey_duration_s: f64,
    pub return_orbit_s: f64,
    pub waypoint_capture_m: f64,
    pub max_duration_s: f64,
}

impl Default for MissionProfile {
    fn default() -> Self {
        Self {
            max_turn_rate_deg_s: 20.0,
            battery_drain_per_s: 0.001,
            climb_rate_m_s: 4.0,
            accel_m_s2: 2.0,
            launch_delay_s: 3.0,
            launch_stagger_s: 5.0,
            orbit_altitude_offset_m: 40.0,
            orbit_speed_factor: 0.8,
            orbit_radius_m: 150.0,
            orbit_duration_s: 20.0,
            survey_speed_factor: 0.6,
            survey_radius_m: 60.0,
            survey_duration_s: 30.0,
            return_orbit_s: 15.0,
            waypoint_capture_m: 30.0,
            max_duration_s: 3600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub area: Rect,
    pub pass_spacing: f64,
    pub target_position: Vec2,
    pub target_size: f64,
    pub visibility: f64,
    pub light_level: f64,
    pub camera_fov_deg: f64,
    pub camera_rate_hz: f64,
    /// Per-frame detection probability under ideal conditions.
    pub detection_base_prob: f64,
    pub confidence_threshold: f64,
    pub uavs: Vec<UavSpec>,
    pub search_timeout_s: f64,
    pub battery_low_threshold: f64,
    pub telemetry_rate_hz: f64,
    pub dt: f64,
    #[serde(default = "default_geoloc_sigma")]
    pub geoloc_noise_sigma: f64,
    /// Scripted mission abort time, seconds.
    #[serde(default)]
    pub abort_time_s: Option<f64>,
    #[serde(default)]
    pub profile: MissionProfile,
}

fn default_geoloc_sigma() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scenario config: {0}")]
pub struct ConfigInvalid(pub String);

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            area: Rect::new(0.0, 0.0, 600.0, 600.0),
            pass_spacing: 150.0,
            target_position: Vec2::new(300.0, 300.0),
            target_size: 5.0,
            visibility: 0.9,
            light_level: 0.9,
            camera_fov_deg: 90.0,
            camera_rate_hz: 2.0,
            detection_base_prob: 0.2,
            confidence_threshold: 0.35,
            uavs: vec![
                UavSpec { position: Vec2::new(-150.0, -100.0), altitude: 100.0, airspeed: 20.0, battery: 1.0 },
                UavSpec { position: Vec2::new(-100.0, -150.0), altitude: 100.0, airspeed: 20.0, battery: 1.0 },
            ],
            search_timeout_s: 400.0,
            battery_low_threshold: 0.2,
            telemetry_rate_hz: 2.0,
            dt: 0.1,
            geoloc_noise_sigma: default_geoloc_sigma(),
            abort_time_s: None,
            profile: MissionProfile::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigInvalid> {
        let fail = |msg: &str| Err(ConfigInvalid(msg.to_string()));
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.uavs.is_empty() {
            return fail("at least one UAV is required");
        }
        if !(self.camera_rate_hz > 0.0 && self.telemetry_rate_hz > 0.0) {
            return fail("camera_rate_hz and telemetry_rate_hz must be > 0");
        }
        if !(self.dt > 0.0) {
            return fail("dt must be > 0");
        }
        if !(self.pass_spacing > 0.0) {
            return fail("pass_spacing must be > 0");
        }
        if !(self.area.width > 0.0 && self.area.height > 0.0) {
            return fail("area width and height must be > 0");
        }
        if !unit(self.visibility) || !unit(self.light_level) {
            return fail("visibility and light_level must lie in [0, 1]");
        }
        if !unit(self.detection_base_prob) || !unit(self.confidence_threshold) || !unit(self.battery_low_threshold) {
            return fail("detection_base_prob, confidence_threshold and battery_low_threshold must lie in [0, 1]");
        }
        if !(self.camera_fov_deg > 0.0 && self.camera_fov_deg < 180.0) {
            return fail("camera_fov_deg must lie in (0, 180)");
        }
        if !(self.search_timeout_s > 0.0) {
            return fail("search_timeout_s must be > 0");
        }
        if !(self.geoloc_noise_sigma >= 0.0) {
            return fail("geoloc_noise_sigma must be >= 0");
        }
        for (i, u) in self.uavs.iter().enumerate() {
            if !(u.altitude > 0.0 && u.airspeed > 0.0) || !unit(u.battery) {
                return Err(ConfigInvalid(format!(
                    "uav {i}: altitude and airspeed must be > 0 and battery in [0, 1]"
                )));
            }
        }
        let p = &self.profile;
        if !(p.max_turn_rate_deg_s > 0.0 && p.climb_rate_m_s > 0.0 && p.accel_m_s2 > 0.0) {
            return fail("profile rates must be > 0");
        }
        if !(p.battery_drain_per_s >= 0.0 && p.max_duration_s > 0.0) {
            return fail("profile drain must be >= 0 and max_duration_s > 0");
        }
        if !(p.orbit_radius_m > 0.0 && p.survey_radius_m > 0.0 && p.waypoint_capture_m > 0.0) {
            return fail("profile radii must be > 0");
        }
        Ok(())
    }

    /// Sub-UAV ground footprint radius of the camera at `altitude`.
    pub fn footprint_radius(&self, altitude: f64) -> f64 {
        altitude.max(0.0) * (self.camera_fov_deg.to_radians() / 2.0).tan()
    }
}
