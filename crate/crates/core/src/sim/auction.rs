use thiserror::Error;

use crate::geometry::Vec2;
use crate::runlog::Bid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("auction held with no bids")]
pub struct EmptyAuction;

/// Sealed-bid, minimum-cost auction. Ties go to the lowest id.
pub fn run_auction(bids: &[Bid]) -> Result<u32, EmptyAuction> {
    bids.iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.uav_id.cmp(&b.uav_id)))
        .map(|b| b.uav_id)
        .ok_or(EmptyAuction)
}

/// Bid cost: distance to the reported target divided by remaining battery.
pub fn bid_cost(position: Vec2, battery: f64, target: Vec2) -> f64 {
    position.distance(target) / battery.max(1e-6)
}
