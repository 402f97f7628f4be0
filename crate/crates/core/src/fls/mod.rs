//! Interval type-2 fuzzy perception engine: trapezoidal IT2 membership
//! functions, min-t-norm rule firing, Karnik–Mendel type reduction and
//! multi-expert rulebase aggregation.

mod experts;
mod km;
mod mf;
mod system;

use thiserror::Error;

pub use experts::{aggregate_experts, read_expert_tables, rule_grid, write_expert_tables, ExpertRuleTable, DEFAULT_WIDENING};
pub use km::{km_type_reduce, TypeReduced};
pub use mf::{fire_rule, FiringInterval, IT2TrapMF, MembershipInterval, Trapezoid};
pub use system::{
    apparent_target_size, build_default_system, fls_inputs_for, read_system, write_system, FlsSystem, FuzzyRule,
    InputClass, LinguisticVariable, PerceptionClass, PerceptionEstimate, RuleActivation, Term, NEUTRAL_SCORE,
};

#[derive(Debug, Error, PartialEq)]
pub enum FlsError {
    #[error("value {value} outside the domain of {variable}")]
    DomainViolation { variable: String, value: f64 },
    #[error("no rule fired")]
    NoFiring,
    #[error("invalid membership function: {0}")]
    InvalidMf(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("missing input {0:?}")]
    MissingInput(String),
    #[error("expert tables do not match the rule grid: {0}")]
    GridMismatch(String),
    #[error("file: {0}")]
    Format(String),
}
