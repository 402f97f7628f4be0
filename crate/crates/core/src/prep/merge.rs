use serde::{Deserialize, Serialize};

use crate::prep::PrepError;
use crate::runlog::{Detection, RunLog, TelemetryRecord};

/// Slack for comparing sample times against tick times.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavSlot {
    pub uav_id: u32,
    /// Latest telemetry at or before the tick; `None` before the first sample.
    pub telemetry: Option<TelemetryRecord>,
    /// Latest detection reported by this vehicle at or before the tick.
    pub detection: Option<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedFrame {
    pub time: f64,
    pub uavs: Vec<UavSlot>,
    pub camera_fov_deg: f64,
    pub visibility: f64,
    pub light_level: f64,
}

impl AlignedFrame {
    pub fn slot(&self, uav_id: u32) -> Option<&UavSlot> {
        self.uavs.iter().find(|s| s.uav_id == uav_id)
    }
}

/// One frame per tick from the first to the last telemetry timestamp,
/// zero-order hold on every stream.
pub fn merge_streams(log: &RunLog, tick_hz: f64) -> Result<Vec<AlignedFrame>, PrepError> {
    if !(tick_hz > 0.0) {
        return Err(PrepError::InvalidTick(tick_hz));
    }
    let (first, last) = log.time_span().ok_or(PrepError::EmptyLog)?;
    let count = ((last - first) * tick_hz + TIME_EPS).floor() as usize + 1;
    let ids = log.uav_ids();

    let tel: Vec<Vec<&TelemetryRecord>> = ids
        .iter()
        .map(|&id| {
            let mut v: Vec<_> = log.telemetry_for(id).collect();
            v.sort_by(|a, b| a.time.total_cmp(&b.time));
            v
        })
        .collect();
    let det: Vec<Vec<&Detection>> = ids
        .iter()
        .map(|&id| {
            let mut v: Vec<_> = log.detections().filter(|d| d.uav_id == id).collect();
            v.sort_by(|a, b| a.time.total_cmp(&b.time));
            v
        })
        .collect();
    let mut tel_cursor = vec![0usize; ids.len()];
    let mut det_cursor = vec![0usize; ids.len()];

    let mut frames = Vec::with_capacity(count);
    for k in 0..count {
        let t = first + k as f64 / tick_hz;
        let uavs = ids
            .iter()
            .enumerate()
            .map(|(i, &uav_id)| {
                while tel_cursor[i] < tel[i].len() && tel[i][tel_cursor[i]].time <= t + TIME_EPS {
                    tel_cursor[i] += 1;
                }
                while det_cursor[i] < det[i].len() && det[i][det_cursor[i]].time <= t + TIME_EPS {
                    det_cursor[i] += 1;
                }
                UavSlot {
                    uav_id,
                    telemetry: tel_cursor[i].checked_sub(1).map(|j| tel[i][j].clone()),
                    detection: det_cursor[i].checked_sub(1).map(|j| det[i][j].clone()),
                }
            })
            .collect();
        frames.push(AlignedFrame {
            time: t,
            uavs,
            camera_fov_deg: log.config.camera_fov_deg,
            visibility: log.config.visibility,
            light_level: log.config.light_level,
        });
    }
    Ok(frames)
}
