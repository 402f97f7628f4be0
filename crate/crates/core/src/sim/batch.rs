//! Randomized scenario families for batch generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::scenario::{ScenarioConfig, UavSpec};

/// Ranges a batch draws from. Each run's seed drives both the scenario draw
/// and the simulation itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchSpec {
    pub template: ScenarioConfig,
    pub visibility: (f64, f64),
    pub light_level: (f64, f64),
    /// Probability that the target is placed inside the search area.
    pub target_inside_prob: f64,
    pub uav_count: (usize, usize),
    pub altitude: (f64, f64),
    pub airspeed: (f64, f64),
    pub battery: (f64, f64),
    pub search_timeout_s: (f64, f64),
    pub abort_prob: f64,
    pub abort_time_s: (f64, f64),
}

impl Default for BatchSpec {
    fn default() -> Self {
        Self {
            template: ScenarioConfig::default(),
            visibility: (0.1, 1.0),
            light_level: (0.1, 1.0),
            target_inside_prob: 0.85,
            uav_count: (1, 3),
            altitude: (95.0, 105.0),
            airspeed: (18.0, 22.0),
            battery: (0.35, 1.0),
            search_timeout_s: (80.0, 320.0),
            abort_prob: 0.05,
            abort_time_s: (60.0, 250.0),
        }
    }
}

/// Separates scenario draws from the simulator's per-vehicle streams.
const SCENARIO_STREAM: u64 = 0x5ce7_a210;

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

impl BatchSpec {
    pub fn scenario(&self, seed: u64) -> ScenarioConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SCENARIO_STREAM);
        let mut c = self.template.clone();
        c.seed = seed;
        c.visibility = draw(&mut rng, self.visibility);
        c.light_level = draw(&mut rng, self.light_level);
        let area = c.area;
        c.target_position = if rng.random_bool(self.target_inside_prob.clamp(0.0, 1.0)) {
            Vec2::new(
                area.x + rng.random_range(0.0..=area.width),
                area.y + rng.random_range(0.0..=area.height),
            )
        } else {
            let c0 = area.center();
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let r = area.width.max(area.height) * rng.random_range(1.0..2.0);
            c0.add(Vec2::new(angle.cos(), angle.sin()).scale(r))
        };
        let (lo, hi) = self.uav_count;
        let n = if hi > lo { rng.random_range(lo..=hi) } else { lo }.max(1);
        c.uavs = (0..n)
            .map(|i| UavSpec {
                position: Vec2::new(area.x - 150.0 + 60.0 * i as f64, area.y - 150.0),
                altitude: draw(&mut rng, self.altitude),
                airspeed: draw(&mut rng, self.airspeed),
                battery: draw(&mut rng, self.battery),
            })
            .collect();
        c.search_timeout_s = draw(&mut rng, self.search_timeout_s);
        c.abort_time_s = rng.random_bool(self.abort_prob.clamp(0.0, 1.0)).then(|| draw(&mut rng, self.abort_time_s));
        c
    }
}
