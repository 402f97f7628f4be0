//! Run logs: the only channel between the simulator and the inference side.
//!
//! On disk a log is JSON Lines. The first line is the `config` record, then
//! `telemetry` and `event` records interleaved in time order:
//!
//! ```text
//! {"type":"config","format_version":"1.0","outcome":"Completed","config":{...}}
//! {"type":"telemetry","time":0.5,"uav_id":0,"x":..,"y":..,"altitude":..,"heading":..,"heading_rate":..,"airspeed":..,"battery":..}
//! {"type":"event","time":3.0,"uav_id":0,"kind":"StateChange","state":"FlyOrbitAndObserve","trigger":"GoForLaunch"}
//! ```

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::behavior::{BehaviorState, Trigger};
use crate::geometry::Vec2;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub time: f64,
    pub uav_id: u32,
    pub x: f64,
    pub y: f64,
    pub altitude: f64,
    pub heading: f64,
    pub heading_rate: f64,
    pub airspeed: f64,
    pub battery: f64,
}

impl TelemetryRecord {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfidenceClass {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub time: f64,
    pub uav_id: u32,
    pub confidence: f64,
    pub confidence_class: ConfidenceClass,
    pub perceived_position: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub uav_id: u32,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    StateChange { state: BehaviorState, trigger: Trigger },
    DetectionMade { detection: Detection },
    AuctionHeld { winner: u32, bids: Vec<Bid> },
    SearchPassCompleted { pass_index: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    pub time: f64,
    pub uav_id: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Completed,
    TimedOut,
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub config: ScenarioConfig,
    pub telemetry: Vec<TelemetryRecord>,
    pub events: Vec<TruthEvent>,
    pub outcome: Outcome,
}

impl RunLog {
    /// Sorted, de-duplicated UAV ids present in the config.
    pub fn uav_ids(&self) -> Vec<u32> {
        (0..self.config.uavs.len() as u32).collect()
    }

    pub fn telemetry_for(&self, uav_id: u32) -> impl Iterator<Item = &TelemetryRecord> {
        self.telemetry.iter().filter(move |r| r.uav_id == uav_id)
    }

    pub fn state_changes_for(&self, uav_id: u32) -> impl Iterator<Item = (f64, BehaviorState, Trigger)> + '_ {
        self.events.iter().filter_map(move |e| match e.kind {
            EventKind::StateChange { state, trigger } if e.uav_id == uav_id => Some((e.time, state, trigger)),
            _ => None,
        })
    }

    pub fn detections(&self) -> impl Iterator<Item = &Detection> {
        self.events.iter().filter_map(|e| match &e.kind {
            EventKind::DetectionMade { detection } => Some(detection),
            _ => None,
        })
    }

    /// Time span covered by the telemetry stream.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        let first = self.telemetry.iter().map(|r| r.time).fold(f64::INFINITY, f64::min);
        let last = self.telemetry.iter().map(|r| r.time).fold(f64::NEG_INFINITY, f64::max);
        (first <= last).then_some((first, last))
    }

    /// Replays every state change through the behavior machine, per UAV.
    pub fn check_transitions(&self) -> Result<(), crate::behavior::InvalidTransition> {
        for id in self.uav_ids() {
            let mut state = BehaviorState::Hold;
            for (_, new_state, trigger) in self.state_changes_for(id) {
                let next = crate::behavior::behavior_transition(state, trigger)?;
                if next != new_state {
                    return Err(crate::behavior::InvalidTransition { state, trigger });
                }
                state = next;
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_jsonl(self, &mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn from_jsonl(bytes: &[u8]) -> Result<RunLog, LogError> {
        read_jsonl(bytes)
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error on line {line}: missing field {field:?}")]
    Schema { line: usize, field: String },
    #[error("invalid record on line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("log has no config record")]
    MissingConfig,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Serialize)]
struct ConfigRecord<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    format_version: &'static str,
    outcome: Outcome,
    config: &'a ScenarioConfig,
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(flatten)]
    inner: &'a T,
}

pub fn write_jsonl<W: Write>(log: &RunLog, mut out: W) -> io::Result<()> {
    let header = ConfigRecord {
        kind: "config",
        format_version: crate::FORMAT_VERSION,
        outcome: log.outcome,
        config: &log.config,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;

    let (mut ti, mut ei) = (0, 0);
    while ti < log.telemetry.len() || ei < log.events.len() {
        let take_telemetry = match (log.telemetry.get(ti), log.events.get(ei)) {
            (Some(t), Some(e)) => t.time <= e.time,
            (Some(_), None) => true,
            _ => false,
        };
        if take_telemetry {
            serde_json::to_writer(&mut out, &Tagged { kind: "telemetry", inner: &log.telemetry[ti] })?;
            ti += 1;
        } else {
            serde_json::to_writer(&mut out, &Tagged { kind: "event", inner: &log.events[ei] })?;
            ei += 1;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

fn typed<T: for<'de> Deserialize<'de>>(value: Value, line: usize) -> Result<T, LogError> {
    serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        match missing_field(&msg) {
            Some(field) => LogError::Schema { line, field },
            None => LogError::Invalid { line, message: msg },
        }
    })
}

fn missing_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("missing field `")?;
    rest.split('`').next().map(str::to_string)
}

pub fn read_jsonl<R: io::Read>(input: R) -> Result<RunLog, LogError> {
    let reader = BufReader::new(input);
    let mut config: Option<(ScenarioConfig, Outcome)> = None;
    let mut telemetry = Vec::new();
    let mut events = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut value: Value = serde_json::from_str(&line)
            .map_err(|e| LogError::Parse { line: line_no, message: e.to_string() })?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| LogError::Invalid { line: line_no, message: "record is not an object".into() })?;
        let kind = match obj.remove("type") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(LogError::Invalid { line: line_no, message: "\"type\" is not a string".into() }),
            None => return Err(LogError::Schema { line: line_no, field: "type".into() }),
        };
        match kind.as_str() {
            "config" => {
                let version = match obj.get("format_version") {
                    Some(Value::String(s)) => s.clone(),
                    _ => return Err(LogError::Schema { line: line_no, field: "format_version".into() }),
                };
                crate::check_format_version(&version)
                    .map_err(|message| LogError::Invalid { line: line_no, message })?;
                let outcome: Outcome = typed(
                    obj.remove("outcome").ok_or(LogError::Schema { line: line_no, field: "outcome".into() })?,
                    line_no,
                )?;
                let cfg: ScenarioConfig = typed(
                    obj.remove("config").ok_or(LogError::Schema { line: line_no, field: "config".into() })?,
                    line_no,
                )?;
                config = Some((cfg, outcome));
            }
            "telemetry" => telemetry.push(typed::<TelemetryRecord>(value, line_no)?),
            "event" => events.push(typed::<TruthEvent>(value, line_no)?),
            other => {
                return Err(LogError::Invalid { line: line_no, message: format!("unknown record type {other:?}") })
            }
        }
    }

    let (config, outcome) = config.ok_or(LogError::MissingConfig)?;
    Ok(RunLog { config, telemetry, events, outcome })
}

pub fn write_log(log: &RunLog, path: impl AsRef<Path>) -> io::Result<()> {
    let file = File::create(path)?;
    write_jsonl(log, BufWriter::new(file))
}

pub fn read_log(path: impl AsRef<Path>) -> Result<RunLog, LogError> {
    read_jsonl(File::open(path)?)
}
