//! Environments: the line, the circle (1D torus), and their products.
//!
//! All metric evaluations go through [`Domain::delta`], which applies the
//! minimal-image convention on periodic axes. Kernels therefore never see
//! coordinates, only displacement vectors.

use serde::{Deserialize, Serialize};

/// One coordinate axis of an environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Torus { length: f64 },
    Line,
}

impl Axis {
    fn wrap(&self, x: f64) -> f64 {
        match self {
            Axis::Torus { length } => {
                let y = x.rem_euclid(*length);
                // rem_euclid can return `length` itself for tiny negative x
                if y >= *length {
                    y - *length
                } else {
                    y
                }
            }
            Axis::Line => x,
        }
    }

    fn delta(&self, a: f64, b: f64) -> f64 {
        match self {
            Axis::Torus { length } => {
                let mut d = (a - b).rem_euclid(*length);
                if d > 0.5 * length {
                    d -= length;
                }
                d
            }
            Axis::Line => a - b,
        }
    }
}

/// A 1D or 2D environment, as a product of axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    axes: [Axis; 2],
    dim: usize,
}

/// A point of an environment. For 1D domains the second component is 0.
pub type Point = [f64; 2];

impl Domain {
    pub fn torus(length: f64) -> Self {
        assert!(length > 0.0, "torus length must be positive");
        Domain {
            axes: [Axis::Torus { length }, Axis::Line],
            dim: 1,
        }
    }

    pub fn line() -> Self {
        Domain {
            axes: [Axis::Line, Axis::Line],
            dim: 1,
        }
    }

    /// Product of two axes, e.g. phase space `torus × line`.
    pub fn product(a: Axis, b: Axis) -> Self {
        Domain {
            axes: [a, b],
            dim: 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axis(&self, k: usize) -> Axis {
        self.axes[k]
    }

    /// Length of the periodic axis of a 1D torus domain.
    pub fn torus_length(&self) -> Option<f64> {
        if self.dim == 1 {
            if let Axis::Torus { length } = self.axes[0] {
                return Some(length);
            }
        }
        None
    }

    pub fn wrap(&self, p: Point) -> Point {
        let mut q = p;
        for k in 0..self.dim {
            q[k] = self.axes[k].wrap(p[k]);
        }
        q
    }

    /// Minimal-image displacement `a - b`, componentwise.
    pub fn delta(&self, a: Point, b: Point) -> Point {
        let mut d = [0.0; 2];
        for k in 0..self.dim {
            d[k] = self.axes[k].delta(a[k], b[k]);
        }
        d
    }

    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let d = self.delta(a, b);
        if self.dim == 1 {
            d[0].abs()
        } else {
            d[0].hypot(d[1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_minimal_image() {
        let d = Domain::torus(1.0);
        assert!((d.distance([0.1, 0.0], [0.9, 0.0]) - 0.2).abs() < 1e-15);
        assert!((d.distance([0.0, 0.0], [0.5, 0.0]) - 0.5).abs() < 1e-15);
        let w = d.wrap([-0.25, 0.0]);
        assert!((w[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn line_distance_is_euclidean() {
        let d = Domain::line();
        assert_eq!(d.distance([2.0, 0.0], [-1.0, 0.0]), 3.0);
    }

    #[test]
    fn product_phase_space() {
        let d = Domain::product(Axis::Torus { length: 2.0 }, Axis::Line);
        assert_eq!(d.dim(), 2);
        let dist = d.distance([0.1, 1.0], [1.9, -1.0]);
        assert!((dist - (0.2f64.powi(2) + 4.0).sqrt()).abs() < 1e-15);
    }
}
