use crate::geometry::{Rect, Vec2};
use crate::scenario::ScenarioConfig;

/// One straight sweep of the lawnmower pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pass {
    pub start: Vec2,
    pub end: Vec2,
}

/// Back-and-forth passes over a rectangle.
///
/// Passes run parallel to the y axis and are centered across the width, so
/// a spacing wider than the area yields a single pass down the middle.
#[derive(Debug, Clone, PartialEq)]
pub struct LawnmowerPlan {
    pub passes: Vec<Pass>,
}

impl LawnmowerPlan {
    pub fn pass_count(&self) -> usize {
        self.passes.len()
    }

    /// Waypoints in flight order: start and end of every pass.
    pub fn waypoints(&self) -> Vec<Vec2> {
        self.passes.iter().flat_map(|p| [p.start, p.end]).collect()
    }

    /// Total path length including the connectors between passes.
    pub fn path_length(&self) -> f64 {
        self.waypoints().windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Fraction of the flight path completed when the vehicle is at `p`,
    /// measured by projecting `p` onto the nearest segment of the path.
    pub fn progress_fraction(&self, p: Vec2) -> f64 {
        let wps = self.waypoints();
        let total = self.path_length();
        if total <= 0.0 {
            return 1.0;
        }
        let mut best = (f64::INFINITY, 0.0);
        let mut walked = 0.0;
        for seg in wps.windows(2) {
            let d = seg[1].sub(seg[0]);
            let len2 = d.dot(d);
            let t = if len2 > 0.0 { (p.sub(seg[0]).dot(d) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let proj = seg[0].add(d.scale(t));
            let dist = proj.distance(p);
            if dist < best.0 {
                best = (dist, walked + t * len2.sqrt());
            }
            walked += len2.sqrt();
        }
        (best.1 / total).clamp(0.0, 1.0)
    }

    /// Unit direction of the segment of the path nearest to `p`.
    pub fn leg_direction_at(&self, p: Vec2) -> Vec2 {
        let wps = self.waypoints();
        let mut best = (f64::INFINITY, Vec2::new(0.0, 1.0));
        for seg in wps.windows(2) {
            let d = seg[1].sub(seg[0]);
            let len = d.norm();
            if len == 0.0 {
                continue;
            }
            let t = (p.sub(seg[0]).dot(d) / (len * len)).clamp(0.0, 1.0);
            let dist = seg[0].add(d.scale(t)).distance(p);
            if dist < best.0 {
                best = (dist, d.scale(1.0 / len));
            }
        }
        best.1
    }
}

/// The lawnmower plan over the strip assigned to `uav_id`: the search area
/// is split into equal vertical strips, one per vehicle in id order.
pub fn search_plan(config: &ScenarioConfig, uav_id: u32) -> Option<LawnmowerPlan> {
    let strips = config.area.vertical_strips(config.uavs.len());
    strips.get(uav_id as usize).map(|strip| lawnmower_plan(strip, config.pass_spacing))
}

/// Pass count is `floor(width / pass_spacing) + 1`.
pub fn lawnmower_plan(area: &Rect, pass_spacing: f64) -> LawnmowerPlan {
    assert!(pass_spacing > 0.0, "pass_spacing must be > 0");
    let count = (area.width / pass_spacing).floor() as usize + 1;
    let offset = (area.width - (count - 1) as f64 * pass_spacing) / 2.0;
    let (y0, y1) = (area.y, area.y + area.height);
    let passes = (0..count)
        .map(|i| {
            let x = area.x + offset + i as f64 * pass_spacing;
            if i % 2 == 0 {
                Pass { start: Vec2::new(x, y0), end: Vec2::new(x, y1) }
            } else {
                Pass { start: Vec2::new(x, y1), end: Vec2::new(x, y0) }
            }
        })
        .collect();
    LawnmowerPlan { passes }
}
