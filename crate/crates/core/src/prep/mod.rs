//! Preprocessing: aligning streams of different rates, deriving and
//! normalizing features, labeling frames from the truth channel.

mod dataset;
mod features;
mod label;
mod merge;
mod normalize;

use thiserror::Error;

pub use dataset::{read_dataset, write_dataset, DatasetHeader, DatasetRecord};
pub use features::{derive_features, Feature, FeatureSet, FeatureVector, DEFAULT_WINDOW};
pub use label::{extract_samples, label_frames, FrameSample, LabeledFrames, LabeledInstance};
pub use merge::{merge_streams, AlignedFrame, UavSlot};
pub use normalize::{apply_normalization, fit_normalization, NormalizationStats};

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("log contains no telemetry")]
    EmptyLog,
    #[error("tick rate must be > 0, got {0}")]
    InvalidTick(f64),
    #[error("feature window needs at least 2 frames, got {0}")]
    WindowTooShort(usize),
    #[error("no telemetry for uav {uav_id} at t={time}")]
    MissingTelemetry { uav_id: u32, time: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("frames do not belong to this log: {0}")]
    MismatchedLog(String),
    #[error("dataset file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
