use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::replay::{EnrichedFrame, ReplayError, RunOverlay};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Play,
    Pause,
    Seek(f64),
    Rate(f64),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Play => "play",
            Command::Pause => "pause",
            Command::Seek(_) => "seek",
            Command::Rate(_) => "rate",
        }
    }
}

impl FromStr for Command {
    type Err = ReplayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReplayError::MalformedCommand(s.to_string());
        let mut parts = s.split_whitespace();
        let cmd = match (parts.next(), parts.next()) {
            (Some("play"), None) => Command::Play,
            (Some("pause"), None) => Command::Pause,
            (Some("seek"), Some(v)) => {
                let t: f64 = v.parse().map_err(|_| bad())?;
                if !t.is_finite() {
                    return Err(bad());
                }
                Command::Seek(t)
            }
            (Some("rate"), Some(v)) => {
                let r: f64 = v.parse().map_err(|_| bad())?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(bad());
                }
                Command::Rate(r)
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(cmd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    Frame(EnrichedFrame),
    Ack { command: String, cursor: f64, rate: f64, playing: bool },
    /// Playback reached the last frame and stopped.
    End { cursor: f64 },
    Error { message: String },
}

/// Cursor state of one stream connection. Sans-IO: the caller feeds
/// commands and pulls due frames at [`PlaybackSession::frame_interval`].
#[derive(Debug, Clone)]
pub struct PlaybackSession {
    overlay: Arc<RunOverlay>,
    cursor: f64,
    rate: f64,
    playing: bool,
    /// Index of the next frame to emit while playing.
    next: usize,
}

impl PlaybackSession {
    pub fn new(overlay: Arc<RunOverlay>) -> Self {
        let cursor = overlay.frames.first().map_or(0.0, |f| f.time);
        Self { overlay, cursor, rate: 1.0, playing: false, next: 0 }
    }

    pub fn run_id(&self) -> &str {
        &self.overlay.run_id
    }

    pub fn cursor(&self) -> f64 {
        self.cursor
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn is_playing(&self) -> bool {
        self.playing
    }

    /// Wall-clock gap between frames at the current rate.
    pub fn frame_interval(&self) -> Duration {
        Duration::from_secs_f64(1.0 / (self.overlay.tick_hz * self.rate))
    }

    fn ack(&self, cmd: &Command) -> ServerMessage {
        ServerMessage::Ack { command: cmd.name().into(), cursor: self.cursor, rate: self.rate, playing: self.playing }
    }

    /// Applies a command; the acknowledgment comes first, and a seek is
    /// followed by exactly one frame.
    pub fn apply(&mut self, cmd: Command) -> Vec<ServerMessage> {
        match cmd {
            Command::Play => {
                self.playing = true;
                vec![self.ack(&cmd)]
            }
            Command::Pause => {
                self.playing = false;
                vec![self.ack(&cmd)]
            }
            Command::Rate(r) => {
                self.rate = r;
                vec![self.ack(&cmd)]
            }
            Command::Seek(t) => match self.overlay.nearest(t) {
                Some(k) => {
                    let frame = self.overlay.frames[k].clone();
                    self.cursor = frame.time;
                    self.next = k + 1;
                    vec![self.ack(&cmd), ServerMessage::Frame(frame)]
                }
                None => vec![self.ack(&cmd)],
            },
        }
    }

    /// Parses and applies a text command; malformed input yields an
    /// error message and leaves the session untouched.
    pub fn apply_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match text.parse::<Command>() {
            Ok(cmd) => self.apply(cmd),
            Err(e) => vec![ServerMessage::Error { message: e.to_string() }],
        }
    }

    /// The next frame when playing; `End` once past the last frame.
    pub fn next_frame(&mut self) -> Option<ServerMessage> {
        if !self.playing {
            return None;
        }
        match self.overlay.frames.get(self.next) {
            Some(f) => {
                self.cursor = f.time;
                self.next += 1;
                Some(ServerMessage::Frame(f.clone()))
            }
            None => {
                self.playing = false;
                Some(ServerMessage::End { cursor: self.cursor })
            }
        }
    }
}
