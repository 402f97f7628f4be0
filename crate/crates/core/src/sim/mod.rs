//! Deterministic multi-UAV collaborative-search simulator.

pub mod auction;
pub mod batch;
mod engine;
pub mod kinematics;
pub mod plan;
pub mod sensing;

pub use auction::{bid_cost, run_auction, EmptyAuction};
pub use engine::simulate;
pub use kinematics::{step_kinematics, UavKinematicState, VehicleLimits};
pub use plan::{lawnmower_plan, search_plan, LawnmowerPlan, Pass};
pub use sensing::{detection_probability, sense_target};
