use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_180, wrap_360, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavKinematicState {
    pub position: Vec2,
    pub altitude: f64,
    /// Compass degrees in [0, 360).
    pub heading: f64,
    /// deg/s, signed (positive = clockwise).
    pub heading_rate: f64,
    pub airspeed: f64,
    pub battery: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleLimits {
    pub max_turn_rate_deg_s: f64,
    pub battery_drain_per_s: f64,
}

impl Default for VehicleLimits {
    fn default() -> Self {
        Self { max_turn_rate_deg_s: 20.0, battery_drain_per_s: 0.001 }
    }
}

/// Constant-airspeed point-mass step with a rate-limited turn toward
/// `waypoint`. The turn is applied first, then the position advances along
/// the new heading.
pub fn step_kinematics(
    state: &UavKinematicState,
    waypoint: Vec2,
    dt: f64,
    limits: &VehicleLimits,
) -> UavKinematicState {
    debug_assert!(dt > 0.0);
    let max_turn = limits.max_turn_rate_deg_s * dt;
    let error = wrap_180(state.position.bearing_to(waypoint) - state.heading);
    let turn = if state.position.distance(waypoint) > 0.0 { error.clamp(-max_turn, max_turn) } else { 0.0 };
    let heading = wrap_360(state.heading + turn);
    let heading_rate = wrap_180(heading - state.heading) / dt;
    let position = state.position.add(Vec2::from_heading(heading).scale(state.airspeed * dt));
    UavKinematicState {
        position,
        altitude: state.altitude,
        heading,
        heading_rate,
        airspeed: state.airspeed,
        battery: (state.battery - limits.battery_drain_per_s * dt).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_origin(heading: f64) -> UavKinematicState {
        UavKinematicState {
            position: Vec2::new(0.0, 0.0),
            altitude: 100.0,
            heading,
            heading_rate: 0.0,
            airspeed: 20.0,
            battery: 1.0,
        }
    }

    #[test]
    fn on_bearing_flies_straight() {
        let s = step_kinematics(&at_origin(0.0), Vec2::new(0.0, 1000.0), 1.0, &VehicleLimits::default());
        assert_eq!(s.heading, 0.0);
        assert!((s.position.y - 20.0).abs() < 1e-12);
        assert!(s.position.x.abs() < 1e-12);
        assert!((s.battery - 0.999).abs() < 1e-12);
    }

    #[test]
    fn turn_is_rate_limited() {
        let s = step_kinematics(&at_origin(0.0), Vec2::new(1000.0, 0.0), 1.0, &VehicleLimits::default());
        assert!((s.heading - 20.0).abs() < 1e-12);
        assert!((s.heading_rate - 20.0).abs() < 1e-12);
    }

    #[test]
    fn heading_rate_wraps_across_north() {
        let s = step_kinematics(&at_origin(350.0), Vec2::new(1000.0, 1000.0), 1.0, &VehicleLimits::default());
        assert!((s.heading - 10.0).abs() < 1e-9);
        assert!((s.heading_rate - 20.0).abs() < 1e-9);
    }

    /// Fine-step reference integrator, written independently of
    /// `step_kinematics`: turn toward the waypoint at the rate limit, then
    /// integrate position.
    fn reference(start: UavKinematicState, wp: Vec2, total: f64, steps: usize, max_rate: f64) -> Vec2 {
        let h = total / steps as f64;
        let (mut x, mut y, mut hd) = (start.position.x, start.position.y, start.heading);
        for _ in 0..steps {
            let want = (wp.x - x).atan2(wp.y - y).to_degrees();
            let mut err = (want - hd) % 360.0;
            if err > 180.0 {
                err -= 360.0;
            }
            if err < -180.0 {
                err += 360.0;
            }
            hd += err.clamp(-max_rate * h, max_rate * h);
            x += start.airspeed * h * hd.to_radians().sin();
            y += start.airspeed * h * hd.to_radians().cos();
        }
        Vec2::new(x, y)
    }

    #[test]
    fn integration_error_is_bounded() {
        let limits = VehicleLimits::default();
        for (heading, wp) in [(0.0, Vec2::new(300.0, 50.0)), (90.0, Vec2::new(-200.0, -200.0)), (200.0, Vec2::new(0.0, 500.0))] {
            let start = at_origin(heading);
            let oracle = reference(start, wp, 1.0, 1000, limits.max_turn_rate_deg_s);
            let mut fine = start;
            for _ in 0..10 {
                fine = step_kinematics(&fine, wp, 0.1, &limits);
            }
            let coarse = step_kinematics(&start, wp, 1.0, &limits);
            let bound = start.airspeed * 0.5;
            assert!(fine.position.distance(oracle) < bound);
            assert!(coarse.position.distance(oracle) < bound);
            assert!(fine.position.distance(coarse.position) < bound);
        }
    }
}
