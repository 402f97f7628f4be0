use serde::{Deserialize, Serialize};

use crate::fls::FlsError;

/// Unit-height trapezoid with feet `a`, `d` and shoulders `b`, `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<[f64; 4]> for Trapezoid {
    fn from([a, b, c, d]: [f64; 4]) -> Self {
        Self { a, b, c, d }
    }
}

impl From<Trapezoid> for [f64; 4] {
    fn from(t: Trapezoid) -> Self {
        [t.a, t.b, t.c, t.d]
    }
}

impl Trapezoid {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn is_ordered(&self) -> bool {
        self.a <= self.b && self.b <= self.c && self.c <= self.d
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.a || x > self.d {
            0.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else if x <= self.c {
            1.0
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }

    /// Abscissa of the area centroid.
    pub fn centroid(&self) -> f64 {
        let Trapezoid { a, b, c, d } = *self;
        // Decompose into rising triangle, core rectangle, falling triangle.
        let parts = [
            ((b - a) / 2.0, a + 2.0 * (b - a) / 3.0),
            (c - b, (b + c) / 2.0),
            ((d - c) / 2.0, c + (d - c) / 3.0),
        ];
        let area: f64 = parts.iter().map(|p| p.0).sum();
        if area <= 0.0 {
            return (a + d) / 2.0;
        }
        parts.iter().map(|(w, x)| w * x).sum::<f64>() / area
    }
}

/// Membership grade interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipInterval {
    pub lower: f64,
    pub upper: f64,
}

/// Upper trapezoid of height 1 and a contained lower trapezoid scaled to
/// `height`; the band between them is the footprint of uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IT2TrapMF {
    pub upper: Trapezoid,
    pub lower: Trapezoid,
    pub height: f64,
}

impl IT2TrapMF {
    pub fn new(upper: Trapezoid, lower: Trapezoid, height: f64) -> Result<Self, FlsError> {
        let mf = Self { upper, lower, height };
        mf.validate()?;
        Ok(mf)
    }

    /// Lower equals upper at full height: an ordinary type-1 set.
    pub fn type1(t: Trapezoid) -> Self {
        Self { upper: t, lower: t, height: 1.0 }
    }

    pub fn validate(&self) -> Result<(), FlsError> {
        let (u, l) = (self.upper, self.lower);
        if !u.is_ordered() || !l.is_ordered() {
            return Err(FlsError::InvalidMf(format!("unordered abscissae {u:?} / {l:?}")));
        }
        if !(u.a <= l.a && u.b <= l.b && l.c <= u.c && l.d <= u.d) {
            return Err(FlsError::InvalidMf(format!("lower {l:?} not contained in upper {u:?}")));
        }
        if !(self.height > 0.0 && self.height <= 1.0) {
            return Err(FlsError::InvalidMf(format!("lower height {} not in (0, 1]", self.height)));
        }
        Ok(())
    }

    pub fn fuzzify(&self, x: f64) -> MembershipInterval {
        let upper = self.upper.eval(x);
        // Containment makes lower <= upper analytically; the min guards
        // against rounding on shared edges.
        let lower = (self.height * self.lower.eval(x)).min(upper);
        MembershipInterval { lower, upper }
    }

    /// Midpoint of the upper and lower trapezoid centroids.
    pub fn centroid(&self) -> f64 {
        (self.upper.centroid() + self.lower.centroid()) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiringInterval {
    pub lower: f64,
    pub upper: f64,
}

/// Minimum t-norm over the antecedent grades.
pub fn fire_rule(grades: &[MembershipInterval]) -> FiringInterval {
    grades.iter().fold(FiringInterval { lower: 1.0, upper: 1.0 }, |f, g| FiringInterval {
        lower: f.lower.min(g.lower),
        upper: f.upper.min(g.upper),
    })
}
