//! Behavior-state and perception inference for simulated multi-UAV search
//! missions.
//!
//! The crate is organized along the dataflow of the workbench:
//!
//! * [`sim`] runs a deterministic collaborative-search mission and writes a
//!   [`runlog::RunLog`] (telemetry plus truth events).
//! * [`prep`] aligns the telemetry streams, derives features and labels
//!   frames from the truth channel.
//! * [`lcs`] is a supervised learning classifier system that infers the
//!   active behavior state and transition triggers from features alone.
//! * [`fls`] is an interval type-2 fuzzy system estimating target-detection
//!   performance from scenario conditions.
//! * [`compare`] scores inferences against simulator truth.
//! * [`replay`] indexes stored runs, builds display overlays and drives
//!   tester playback sessions.
//! * [`pipeline`] wires the pieces together for the CLI and the server.

pub mod behavior;
pub mod compare;
pub mod fls;
pub mod geometry;
pub mod lcs;
pub mod pipeline;
pub mod prep;
pub mod replay;
pub mod runlog;
pub mod scenario;
pub mod sim;

/// Version tag written into every file this crate produces.
pub const FORMAT_VERSION: &str = "1.0";

/// Major version accepted by the readers.
pub const FORMAT_MAJOR: u32 = 1;

/// Checks a `format_version` string against [`FORMAT_MAJOR`].
pub fn check_format_version(version: &str) -> Result<(), String> {
    let major = version
        .split('.')
        .next()
        .and_then(|m| m.parse::<u32>().ok())
        .ok_or_else(|| format!("unparseable format_version {version:?}"))?;
    if major != FORMAT_MAJOR {
        return Err(format!(
            "unsupported format_version {version} (expected major {FORMAT_MAJOR})"
        ));
    }
    Ok(())
}

pub use behavior::{behavior_transition, BehaviorState, Trigger};
pub use runlog::{read_log, write_log, RunLog};
pub use scenario::ScenarioConfig;
pub use sim::simulate;
