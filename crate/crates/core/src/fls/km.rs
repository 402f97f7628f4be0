use serde::{Deserialize, Serialize};

use crate::fls::{FiringInterval, FlsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeReduced {
    pub y_l: f64,
    pub y_r: f64,
}

impl TypeReduced {
    pub fn midpoint(&self) -> f64 {
        (self.y_l + self.y_r) / 2.0
    }
}

/// Karnik–Mendel type reduction of center-of-sets form: `y_l` is the
/// minimum and `y_r` the maximum of `Σ f_i c_i / Σ f_i` over weights
/// `f_i` drawn from the firing intervals.
pub fn km_type_reduce(centroids: &[f64], firing: &[FiringInterval]) -> Result<TypeReduced, FlsError> {
    if centroids.len() != firing.len() {
        return Err(FlsError::InvalidSystem(format!(
            "{} centroids for {} firing intervals",
            centroids.len(),
            firing.len()
        )));
    }
    let mut items: Vec<(f64, f64, f64)> = centroids
        .iter()
        .zip(firing)
        .filter(|(_, f)| f.upper > 0.0)
        .map(|(&c, f)| (c, f.lower, f.upper))
        .collect();
    if items.is_empty() {
        return Err(FlsError::NoFiring);
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let y_l = km_endpoint(&items, true);
    // Equal centroids can leave the right end a rounding step below the left.
    let y_r = km_endpoint(&items, false).max(y_l);
    Ok(TypeReduced { y_l, y_r })
}

/// Iterates the switch point until it stops moving. For the left end,
/// rules with centroid at or below the estimate take their upper firing
/// and the rest their lower; the right end mirrors that, so the side
/// taking upper firings is never empty.
fn km_endpoint(items: &[(f64, f64, f64)], left: bool) -> f64 {
    let weighted = |split: usize| {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &(c, lo, up)) in items.iter().enumerate() {
            let w = if (i < split) == left { up } else { lo };
            num += w * c;
            den += w;
        }
        num / den
    };
    let (mut num, mut den) = (0.0, 0.0);
    for &(c, lo, up) in items {
        let w = (lo + up) / 2.0;
        num += w * c;
        den += w;
    }
    let mut y = num / den;
    let mut switch = usize::MAX;
    for _ in 0..=items.len() + 1 {
        let split = if left {
            items.iter().filter(|it| it.0 <= y).count()
        } else {
            items.iter().filter(|it| it.0 < y).count()
        };
        if split == switch {
            break;
        }
        switch = split;
        y = weighted(split);
    }
    y
}
