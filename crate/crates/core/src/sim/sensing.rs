use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::runlog::{ConfidenceClass, Detection};
use crate::scenario::ScenarioConfig;
use crate::sim::kinematics::UavKinematicState;

/// Per-frame detection probability once the target is in the footprint.
pub fn detection_probability(config: &ScenarioConfig) -> f64 {
    config.detection_base_prob * config.visibility * config.light_level
}

/// Stochastic stand-in for the onboard vision pipeline, evaluated once per
/// camera frame.
pub fn sense_target<R: Rng + ?Sized>(
    uav: &UavKinematicState,
    uav_id: u32,
    time: f64,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Option<Detection> {
    let radius = config.footprint_radius(uav.altitude);
    let distance = uav.position.distance(config.target_position);
    if radius <= 0.0 || distance > radius {
        return None;
    }
    let p = detection_probability(config);
    if p <= 0.0 || rng.random::<f64>() >= p {
        return None;
    }
    let confidence = (1.0 - distance / radius).clamp(0.0, 1.0) * config.visibility;
    let confidence_class = if confidence >= config.confidence_threshold { ConfidenceClass::High } else { ConfidenceClass::Low };
    let mut perceived = config.target_position;
    if config.geoloc_noise_sigma > 0.0 {
        let noise = Normal::new(0.0, config.geoloc_noise_sigma).expect("sigma validated");
        perceived.x += noise.sample(rng);
        perceived.y += noise.sample(rng);
    }
    Some(Detection { time, uav_id, confidence, confidence_class, perceived_position: perceived })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn overhead(config: &ScenarioConfig, offset: f64) -> UavKinematicState {
        UavKinematicState {
            position: config.target_position.add(Vec2::new(offset, 0.0)),
            altitude: 100.0,
            heading: 0.0,
            heading_rate: 0.0,
            airspeed: 20.0,
            battery: 1.0,
        }
    }

    #[test]
    fn outside_footprint_never_detects() {
        let config = ScenarioConfig { detection_base_prob: 1.0, visibility: 1.0, light_level: 1.0, ..Default::default() };
        let uav = overhead(&config, config.footprint_radius(100.0) + 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| sense_target(&uav, 0, 0.0, &config, &mut rng).is_none()));
    }

    #[test]
    fn zero_visibility_never_detects() {
        let config = ScenarioConfig { detection_base_prob: 1.0, visibility: 0.0, light_level: 1.0, ..Default::default() };
        let uav = overhead(&config, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..1000).all(|_| sense_target(&uav, 0, 0.0, &config, &mut rng).is_none()));
    }

    #[test]
    fn monte_carlo_frequency_matches_model() {
        let config = ScenarioConfig { detection_base_prob: 0.75, visibility: 0.8, light_level: 1.0, ..Default::default() };
        assert!((detection_probability(&config) - 0.6).abs() < 1e-12);
        let uav = overhead(&config, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let hits = (0..10_000).filter(|_| sense_target(&uav, 0, 0.0, &config, &mut rng).is_some()).count();
        let freq = hits as f64 / 10_000.0;
        assert!((freq - 0.6).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn confidence_class_matches_threshold() {
        let config = ScenarioConfig { detection_base_prob: 1.0, visibility: 1.0, light_level: 1.0, ..Default::default() };
        let radius = config.footprint_radius(100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..50 {
            let uav = overhead(&config, radius * k as f64 / 50.0);
            let d = sense_target(&uav, 0, 0.0, &config, &mut rng).unwrap();
            let expected = (1.0 - k as f64 / 50.0) * config.visibility;
            assert!((d.confidence - expected).abs() < 1e-9);
            assert_eq!(d.confidence_class == ConfidenceClass::High, d.confidence >= config.confidence_threshold);
        }
    }
}
