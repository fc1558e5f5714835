//! Smooth partitions of unity on the torus for segregation models.

use serde::{Deserialize, Serialize};

use crate::measures::kernel::smooth_cutoff_profile;
use crate::measures::{Domain, Point};

/// `L` smooth bumps on a torus, normalized so they sum to 1 exactly.
///
/// Bump `l` is the library cutoff centered at `centers[l]` with radius
/// `width`; normalization requires the bumps to cover the circle, which the
/// constructor enforces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    pub length: f64,
    pub centers: Vec<f64>,
    pub width: f64,
}

impl Partition {
    /// Equally spaced bumps with radius equal to the spacing.
    pub fn uniform(length: f64, l: usize) -> Self {
        assert!(l >= 2, "a partition needs at least two neighborhoods");
        let spacing = length / l as f64;
        Partition {
            length,
            centers: (0..l).map(|i| (i as f64 + 0.5) * spacing).collect(),
            width: spacing,
        }
    }

    pub fn with_width(length: f64, l: usize, width: f64) -> Self {
        let mut p = Self::uniform(length, l);
        let spacing = length / l as f64;
        assert!(
            width >= 0.75 * spacing,
            "bumps of radius {width} cannot cover spacing {spacing}"
        );
        p.width = width;
        p
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    fn raw(&self, l: usize, x: f64) -> f64 {
        let domain = Domain::torus(self.length);
        let d = domain.distance([x, 0.0], [self.centers[l], 0.0]);
        smooth_cutoff_profile(d / self.width)
    }

    /// `g_l(x)`, the normalized bump.
    pub fn eval(&self, l: usize, x: Point) -> f64 {
        let total: f64 = (0..self.len()).map(|k| self.raw(k, x[0])).sum();
        debug_assert!(total > 0.0, "partition bumps must cover the torus");
        self.raw(l, x[0]) / total
    }

    /// All `g_l(x)` at once.
    pub fn eval_all(&self, x: Point) -> Vec<f64> {
        let raws: Vec<f64> = (0..self.len()).map(|k| self.raw(k, x[0])).collect();
        let total: f64 = raws.iter().sum();
        raws.into_iter().map(|r| r / total).collect()
    }

    /// Radius of a ball guaranteed to sit inside every pairwise overlap of
    /// adjacent neighborhoods, with both bumps above a fixed level there.
    pub fn overlap_radius(&self) -> f64 {
        let spacing = self.length / self.len() as f64;
        // adjacent plateaus end at width/2 from each center; the midpoint
        // region of half-width (width - spacing/2)/2 lies in both supports
        0.25 * (2.0 * self.width - spacing).min(spacing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_sums_to_one() {
        let p = Partition::uniform(2.0, 3);
        for i in 0..200 {
            let x = i as f64 * 0.01;
            let s: f64 = p.eval_all([x, 0.0]).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bumps_are_local() {
        let p = Partition::uniform(1.0, 2);
        // far side of the circle from center 0
        let g0 = p.eval(0, [0.75, 0.0]);
        assert!(g0 < 1e-12);
        let g1 = p.eval(1, [0.75, 0.0]);
        assert!((g1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_radius_positive() {
        let p = Partition::uniform(1.0, 4);
        assert!(p.overlap_radius() > 0.0);
    }
}
