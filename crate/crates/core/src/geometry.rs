//! Flat local east/north plane, meters. Headings are compass degrees:
//! 0 = north (+y), 90 = east (+x).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Compass bearing from `self` to `other`, in [0, 360).
    pub fn bearing_to(self, other: Vec2) -> f64 {
        let d = other.sub(self);
        wrap_360(d.x.atan2(d.y).to_degrees())
    }

    /// Unit vector along a compass heading.
    pub fn from_heading(heading_deg: f64) -> Vec2 {
        let h = heading_deg.to_radians();
        Vec2::new(h.sin(), h.cos())
    }
}

/// Axis-aligned rectangle anchored at its minimum corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self { x, y, width, height }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x && p.x <= self.x + self.width && p.y >= self.y && p.y <= self.y + self.height
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn signed_boundary_distance(&self, p: Vec2) -> f64 {
        let (x1, y1) = (self.x + self.width, self.y + self.height);
        if self.contains(p) {
            (p.x - self.x).min(x1 - p.x).min(p.y - self.y).min(y1 - p.y)
        } else {
            let dx = (self.x - p.x).max(0.0).max(p.x - x1);
            let dy = (self.y - p.y).max(0.0).max(p.y - y1);
            -dx.hypot(dy)
        }
    }

    /// Splits the rectangle into `n` equal vertical strips, west to east.
    pub fn vertical_strips(&self, n: usize) -> Vec<Rect> {
        let w = self.width / n as f64;
        (0..n)
            .map(|i| Rect::new(self.x + w * i as f64, self.y, w, self.height))
            .collect()
    }
}

/// Wraps an angle in degrees into [0, 360).
pub fn wrap_360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Wraps an angle in degrees into [-180, 180].
pub fn wrap_180(deg: f64) -> f64 {
    let w = wrap_360(deg + 180.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}
