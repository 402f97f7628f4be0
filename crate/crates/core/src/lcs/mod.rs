//! Supervised Michigan-style learning classifier system over
//! normalized feature vectors.
//!
//! Rules carry interval predicates, and prediction votes by
//! fitness × numerosity × (1 + specificity), so accurate specific rules
//! override general defaults on the region they cover.

mod compact;
mod dataset;
mod params;
mod population;
pub(crate) mod predict;
mod rule;
mod search_end;
mod shard;
mod timeline;
mod train;

use thiserror::Error;

pub use compact::{compact_cra2, compact_pdrc, PdrcThresholds};
pub use dataset::TrainingSet;
pub use params::LcsParams;
pub use population::{read_population, write_population, write_population_to, Population, PopulationHeader};
pub use predict::{class_votes, predict, PredictionExplanation, RuleContribution};
pub use rule::{cover, matches, ClassifierRule, Predicate};
pub use search_end::{
    search_end_examples, search_end_features, SearchEndClassifier, SearchEndExample, SearchEndFeatures, SearchEndLabel,
};
pub use shard::{merge_populations, reduce_shards, train_shards, train_two_layer};
pub use timeline::{infer_state_timeline, InferredChange, StateTimeline, TimelineContext};
pub use train::{train, AccuracyPoint, TrainReport};

#[derive(Debug, Error, PartialEq)]
pub enum LcsError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("population is empty")]
    EmptyPopulation,
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("population file: {0}")]
    Format(String),
}
