use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::behavior::{behavior_transition, BehaviorState, Trigger};
use crate::geometry::Vec2;
use crate::runlog::{Bid, ConfidenceClass, EventKind, Outcome, RunLog, TelemetryRecord, TruthEvent};
use crate::scenario::{ConfigInvalid, MissionProfile, ScenarioConfig, UavSpec};
use crate::sim::auction::{bid_cost, run_auction};
use crate::sim::kinematics::{step_kinematics, UavKinematicState, VehicleLimits};
use crate::sim::plan::search_plan;
use crate::sim::sensing::sense_target;

/// How long the run keeps logging after every vehicle is down.
const SETTLE_S: f64 = 2.0;
/// Lead angle of the orbit carrot point, radians.
const ORBIT_LEAD_RAD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Ground { launch_at: f64 },
    Outbound { orbit_until: f64 },
    Transit,
    Searching,
    Surveying { center: Vec2, until: f64, reacquired: bool },
    Returning,
    ReturnOrbit { until: f64 },
    Landing,
    Landed,
}

impl Phase {
    fn airborne(self) -> bool {
        !matches!(self, Phase::Ground { .. } | Phase::Landed)
    }
}

#[derive(Debug)]
enum Pending {
    Event(EventKind),
    Change { trigger: Trigger, phase: Phase },
}

struct Agent {
    id: u32,
    spec: UavSpec,
    kin: UavKinematicState,
    phase: Phase,
    state: BehaviorState,
    waypoints: Vec<Vec2>,
    wp_idx: usize,
    search_started: Option<f64>,
    home: Vec2,
    rng: ChaCha8Rng,
    outbox: VecDeque<Pending>,
    next_telemetry: f64,
    next_camera: f64,
}

impl Agent {
    fn change_pending(&self) -> bool {
        self.outbox.iter().any(|p| matches!(p, Pending::Change { .. }))
    }

    fn request(&mut self, trigger: Trigger, phase: Phase) {
        self.outbox.push_back(Pending::Change { trigger, phase });
    }

    fn done(&self, aborted: bool) -> bool {
        self.outbox.is_empty()
            && (matches!(self.phase, Phase::Landed) || (aborted && matches!(self.phase, Phase::Ground { .. })))
    }
}

struct Setpoint {
    waypoint: Vec2,
    altitude: f64,
    airspeed: f64,
}

fn orbit_carrot(center: Vec2, radius: f64, position: Vec2) -> Vec2 {
    let rel = position.sub(center);
    let angle = rel.y.atan2(rel.x) + ORBIT_LEAD_RAD;
    center.add(Vec2::new(angle.cos(), angle.sin()).scale(radius))
}

fn approach(current: f64, target: f64, max_step: f64) -> f64 {
    current + (target - current).clamp(-max_step, max_step)
}

fn round_time(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

/// Runs one complete mission and returns its log.
///
/// The result is a pure function of `config` (seed included): every random
/// draw comes from a per-vehicle ChaCha stream keyed by the run seed and the
/// vehicle id, and vehicles are always processed in id order.
pub fn simulate(config: &ScenarioConfig) -> Result<RunLog, ConfigInvalid> {
    config.validate()?;
    let profile = &config.profile;
    let limits = VehicleLimits {
        max_turn_rate_deg_s: profile.max_turn_rate_deg_s,
        battery_drain_per_s: profile.battery_drain_per_s,
    };
    let mut agents: Vec<Agent> = config
        .uavs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            Agent {
                id: i as u32,
                spec: spec.clone(),
                kin: UavKinematicState {
                    position: spec.position,
                    altitude: 0.0,
                    heading: 0.0,
                    heading_rate: 0.0,
                    airspeed: 0.0,
                    battery: spec.battery,
                },
                phase: Phase::Ground { launch_at: profile.launch_delay_s + profile.launch_stagger_s * i as f64 },
                state: BehaviorState::Hold,
                waypoints: search_plan(config, i as u32).expect("one strip per uav").waypoints(),
                wp_idx: 0,
                search_started: None,
                home: spec.position,
                rng,
                outbox: VecDeque::new(),
                next_telemetry: 0.0,
                next_camera: 0.0,
            }
        })
        .collect();

    let mut telemetry = Vec::new();
    let mut events = Vec::new();
    let mut target_claimed = false;
    let mut abort_fired = false;
    let mut done_since: Option<f64> = None;
    let telemetry_period = 1.0 / config.telemetry_rate_hz;
    let camera_period = 1.0 / config.camera_rate_hz;

    for step in 0u64.. {
        let t = round_time(step as f64 * config.dt);
        let aborted = config.abort_time_s.is_some_and(|a| t >= a);
        abort_fired |= aborted;

        for a in agents.iter_mut() {
            if t + 1e-9 >= a.next_telemetry {
                a.next_telemetry += telemetry_period;
                telemetry.push(TelemetryRecord {
                    time: t,
                    uav_id: a.id,
                    x: a.kin.position.x,
                    y: a.kin.position.y,
                    altitude: a.kin.altitude,
                    heading: a.kin.heading,
                    heading_rate: a.kin.heading_rate,
                    airspeed: a.kin.airspeed,
                    battery: a.kin.battery,
                });
            }
        }

        sense_all(&mut agents, config, t, camera_period, &mut target_claimed);

        let setpoints: Vec<Option<Setpoint>> = agents
            .iter_mut()
            .map(|a| decide(a, config, profile, t, aborted, &mut target_claimed))
            .collect();

        for a in agents.iter_mut() {
            if let Some(pending) = a.outbox.pop_front() {
                let kind = match pending {
                    Pending::Event(kind) => kind,
                    Pending::Change { trigger, phase } => {
                        let next = behavior_transition(a.state, trigger)
                            .expect("simulator only requests legal transitions");
                        a.state = next;
                        a.phase = phase;
                        on_enter(a, t);
                        EventKind::StateChange { state: next, trigger }
                    }
                };
                events.push(TruthEvent { time: t, uav_id: a.id, kind });
            }
        }

        let all_done = agents.iter().all(|a| a.done(aborted));
        if all_done {
            let since = *done_since.get_or_insert(t);
            if t - since >= SETTLE_S {
                break;
            }
        } else {
            done_since = None;
        }
        if t >= profile.max_duration_s {
            break;
        }

        for (a, sp) in agents.iter_mut().zip(setpoints) {
            let Some(sp) = sp else { continue };
            if !a.phase.airborne() {
                continue;
            }
            a.kin.airspeed = approach(a.kin.airspeed, sp.airspeed, profile.accel_m_s2 * config.dt);
            a.kin.altitude = approach(a.kin.altitude, sp.altitude, profile.climb_rate_m_s * config.dt).max(0.0);
            a.kin = step_kinematics(&a.kin, sp.waypoint, config.dt, &limits);
        }
    }

    let search_timed_out = events
        .iter()
        .any(|e| matches!(e.kind, EventKind::StateChange { trigger: Trigger::SearchTimeoutReached, .. }));
    let outcome = if abort_fired {
        Outcome::Aborted
    } else if search_timed_out {
        Outcome::TimedOut
    } else {
        Outcome::Completed
    };
    Ok(RunLog { config: config.clone(), telemetry, events, outcome })
}

fn on_enter(a: &mut Agent, t: f64) {
    match a.phase {
        Phase::Searching => {
            if a.search_started.is_none() {
                a.search_started = Some(t);
                a.wp_idx = 1.min(a.waypoints.len() - 1);
            }
        }
        Phase::Landed => {
            a.kin.altitude = 0.0;
            a.kin.airspeed = 0.0;
            a.kin.heading_rate = 0.0;
        }
        _ => {}
    }
}

fn sense_all(agents: &mut [Agent], config: &ScenarioConfig, t: f64, period: f64, target_claimed: &mut bool) {
    for i in 0..agents.len() {
        let a = &mut agents[i];
        let camera_on = matches!(a.phase, Phase::Searching | Phase::Surveying { .. });
        if !(camera_on && t + 1e-9 >= a.next_camera) {
            continue;
        }
        a.next_camera = t + period;
        if a.change_pending() {
            continue;
        }
        let Some(detection) = sense_target(&a.kin, a.id, t, config, &mut a.rng) else { continue };
        let perceived = detection.perceived_position;
        let confident = detection.confidence_class == ConfidenceClass::High;
        a.outbox.push_back(Pending::Event(EventKind::DetectionMade { detection }));
        if let Phase::Surveying { reacquired, .. } = &mut a.phase {
            *reacquired = true;
            continue;
        }
        if !(confident && !*target_claimed) {
            continue;
        }
        let bids: Vec<Bid> = agents
            .iter()
            .filter(|b| matches!(b.phase, Phase::Searching) && !b.change_pending())
            .map(|b| Bid { uav_id: b.id, cost: bid_cost(b.kin.position, b.kin.battery, perceived) })
            .collect();
        let winner = run_auction(&bids).expect("detector always bids");
        *target_claimed = true;
        agents[i].outbox.push_back(Pending::Event(EventKind::AuctionHeld { winner, bids: bids.clone() }));
        let until = t + config.profile.survey_duration_s;
        for bid in &bids {
            let b = &mut agents[bid.uav_id as usize];
            if bid.uav_id == winner {
                b.request(
                    Trigger::PotentialTargetFoundAuctionWon,
                    Phase::Surveying { center: perceived, until, reacquired: false },
                );
            } else {
                b.request(Trigger::PotentialTargetFoundAuctionLost, Phase::Searching);
            }
        }
    }
}

fn decide(
    a: &mut Agent,
    config: &ScenarioConfig,
    p: &MissionProfile,
    t: f64,
    aborted: bool,
    target_claimed: &mut bool,
) -> Option<Setpoint> {
    let search_alt = a.spec.altitude;
    let orbit_alt = a.spec.altitude + p.orbit_altitude_offset_m;
    let search_speed = a.spec.airspeed;
    let orbit_speed = a.spec.airspeed * p.orbit_speed_factor;
    let survey_speed = a.spec.airspeed * p.survey_speed_factor;
    let pos = a.kin.position;
    let home_orbit = Setpoint { waypoint: orbit_carrot(a.home, p.orbit_radius_m, pos), altitude: orbit_alt, airspeed: orbit_speed };
    let pending = a.change_pending();
    let low_battery = a.kin.battery < config.battery_low_threshold;

    match a.phase {
        Phase::Ground { launch_at } => {
            if !pending && !aborted && t >= launch_at {
                let orbit_until = t + orbit_alt / p.climb_rate_m_s + p.orbit_duration_s;
                a.request(Trigger::GoForLaunch, Phase::Outbound { orbit_until });
            }
            None
        }
        Phase::Outbound { orbit_until } => {
            if aborted {
                a.phase = Phase::Returning;
            } else if t >= orbit_until {
                a.phase = Phase::Transit;
            }
            Some(home_orbit)
        }
        Phase::Transit => {
            let wp = a.waypoints[0];
            if aborted {
                a.phase = Phase::Returning;
            } else if !pending && pos.distance(wp) <= p.waypoint_capture_m {
                a.request(Trigger::FirstSearchWaypointReached, Phase::Searching);
            }
            Some(Setpoint { waypoint: wp, altitude: orbit_alt, airspeed: orbit_speed })
        }
        Phase::Searching => {
            let wp = a.waypoints[a.wp_idx];
            if !pending {
                let elapsed = t - a.search_started.unwrap_or(t);
                if aborted {
                    a.request(Trigger::AbortMission, Phase::Returning);
                } else if low_battery {
                    a.request(Trigger::BatteryLow, Phase::Returning);
                } else if elapsed >= config.search_timeout_s {
                    a.request(Trigger::SearchTimeoutReached, Phase::Returning);
                } else if pos.distance(wp) <= p.waypoint_capture_m {
                    if a.wp_idx % 2 == 1 {
                        let pass_index = (a.wp_idx / 2) as u32;
                        a.outbox.push_back(Pending::Event(EventKind::SearchPassCompleted { pass_index }));
                    }
                    if a.wp_idx + 1 == a.waypoints.len() {
                        a.request(Trigger::SearchComplete, Phase::Returning);
                    } else {
                        a.wp_idx += 1;
                    }
                }
            }
            Some(Setpoint { waypoint: a.waypoints[a.wp_idx], altitude: search_alt, airspeed: search_speed })
        }
        Phase::Surveying { center, until, reacquired } => {
            if !pending {
                if aborted {
                    a.request(Trigger::AbortMission, Phase::Returning);
                } else if low_battery {
                    a.request(Trigger::BatteryLow, Phase::Returning);
                } else if t >= until {
                    if reacquired {
                        a.request(Trigger::SurveyComplete, Phase::Returning);
                    } else {
                        *target_claimed = false;
                        a.request(Trigger::PotentialTargetLost, Phase::Searching);
                    }
                }
            }
            Some(Setpoint {
                waypoint: orbit_carrot(center, p.survey_radius_m, pos),
                altitude: search_alt,
                airspeed: survey_speed,
            })
        }
        Phase::Returning => {
            if pos.distance(a.home) <= p.orbit_radius_m {
                a.phase = Phase::ReturnOrbit { until: t + p.return_orbit_s };
            }
            Some(Setpoint { waypoint: a.home, altitude: orbit_alt, airspeed: orbit_speed })
        }
        Phase::ReturnOrbit { until } => {
            if t >= until {
                a.phase = Phase::Landing;
            }
            Some(home_orbit)
        }
        Phase::Landing => {
            if !pending && a.kin.altitude <= 0.0 {
                a.request(Trigger::LandingComplete, Phase::Landed);
            }
            Some(Setpoint { altitude: 0.0, ..home_orbit })
        }
        Phase::Landed => None,
    }
}
