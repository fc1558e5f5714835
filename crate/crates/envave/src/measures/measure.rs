//! Probability measures in atomic and grid form, convolution, thickness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::domain::{Domain, Point};
use super::kernel::Kernel;

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("weights must be non-negative")]
    NegativeWeight,
    #[error("total mass is {0}, must be 1 within 1e-12")]
    MassNotOne(f64),
    #[error("points and weights must have equal length")]
    LengthMismatch,
    #[error("empty evaluation set")]
    EmptyEvaluationSet,
    #[error("empty support")]
    EmptySupport,
    #[error("grid measures require a 1D torus domain")]
    GridNeedsTorus,
    #[error("field has {got} values, measure carries {want} support points")]
    FieldMismatch { got: usize, want: usize },
}

/// A scalar field sampled on the support of a measure (atoms or grid cells).
pub type Field = Vec<f64>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Atomic {
        points: Vec<Point>,
        weights: Vec<f64>,
    },
    /// Uniform cells on a 1D torus; `masses[i]` is the mass of cell `i`
    /// centered at `(i + 1/2) L / n`.
    Grid { masses: Vec<f64> },
}

/// A probability measure on a [`Domain`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Measure {
    pub domain: Domain,
    pub repr: Representation,
}

impl Measure {
    pub fn atomic(
        domain: Domain,
        points: Vec<Point>,
        weights: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        if points.len() != weights.len() {
            return Err(MeasureError::LengthMismatch);
        }
        if points.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(MeasureError::NegativeWeight);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::MassNotOne(total));
        }
        let points = points.into_iter().map(|p| domain.wrap(p)).collect();
        Ok(Measure {
            domain,
            repr: Representation::Atomic { points, weights },
        })
    }

    /// Atomic measure with weights rescaled to unit mass.
    pub fn atomic_normalized(
        domain: Domain,
        points: Vec<Point>,
        weights: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(MeasureError::MassNotOne(total));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::atomic(domain, points, weights)
    }

    /// Equal-mass atoms.
    pub fn empirical(domain: Domain, points: Vec<Point>) -> Result<Self, MeasureError> {
        let n = points.len();
        if n == 0 {
            return Err(MeasureError::EmptySupport);
        }
        let w = vec![1.0 / n as f64; n];
        Self::atomic(domain, points, w)
    }

    /// Grid measure on a 1D torus from cell masses.
    pub fn grid(domain: Domain, masses: Vec<f64>) -> Result<Self, MeasureError> {
        if domain.torus_length().is_none() {
            return Err(MeasureError::GridNeedsTorus);
        }
        if masses.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        if masses.iter().any(|&w| w < 0.0) {
            return Err(MeasureError::NegativeWeight);
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::MassNotOne(total));
        }
        Ok(Measure {
            domain,
            repr: Representation::Grid { masses },
        })
    }

    /// Grid measure from density values at cell centers, normalized to mass 1.
    pub fn grid_from_density(domain: Domain, density: &[f64]) -> Result<Self, MeasureError> {
        let length = domain.torus_length().ok_or(MeasureError::GridNeedsTorus)?;
        if density.iter().any(|&d| d < 0.0) {
            return Err(MeasureError::NegativeWeight);
        }
        let dx = length / density.len() as f64;
        let total: f64 = density.iter().map(|d| d * dx).sum();
        if total <= 0.0 {
            return Err(MeasureError::MassNotOne(total));
        }
        let masses = density.iter().map(|d| d * dx / total).collect();
        Self::grid(domain, masses)
    }

    pub fn uniform_grid(domain: Domain, cells: usize) -> Result<Self, MeasureError> {
        Self::grid(domain, vec![1.0 / cells as f64; cells])
    }

    pub fn support_len(&self) -> usize {
        match &self.repr {
            Representation::Atomic { points, .. } => points.len(),
            Representation::Grid { masses } => masses.len(),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.repr, Representation::Atomic { .. })
    }

    /// Support points: atom positions, or cell centers for grids.
    pub fn support_points(&self) -> Vec<Point> {
        match &self.repr {
            Representation::Atomic { points, .. } => points.clone(),
            Representation::Grid { masses } => {
                let length = self.domain.torus_length().expect("grid is on torus");
                let n = masses.len();
                let dx = length / n as f64;
                (0..n).map(|i| [(i as f64 + 0.5) * dx, 0.0]).collect()
            }
        }
    }

    /// Masses aligned with `support_points`.
    pub fn masses(&self) -> &[f64] {
        match &self.repr {
            Representation::Atomic { weights, .. } => weights,
            Representation::Grid { masses } => masses,
        }
    }

    /// Cell width for grid measures.
    pub fn cell_width(&self) -> Option<f64> {
        match &self.repr {
            Representation::Grid { masses } => {
                Some(self.domain.torus_length().unwrap() / masses.len() as f64)
            }
            Representation::Atomic { .. } => None,
        }
    }

    /// Density values at cell centers for grid measures.
    pub fn density(&self) -> Option<Vec<f64>> {
        let dx = self.cell_width()?;
        match &self.repr {
            Representation::Grid { masses } => Some(masses.iter().map(|m| m / dx).collect()),
            _ => None,
        }
    }

    pub fn check_field(&self, u: &[f64]) -> Result<(), MeasureError> {
        if u.len() != self.support_len() {
            return Err(MeasureError::FieldMismatch {
                got: u.len(),
                want: self.support_len(),
            });
        }
        Ok(())
    }

    /// `(rho * k)(x)`: convolution of the measure with a radial kernel.
    pub fn convolve(&self, k: &Kernel, x: Point) -> f64 {
        match &self.repr {
            Representation::Atomic { points, weights } => points
                .iter()
                .zip(weights)
                .map(|(p, w)| w * k.eval(self.domain.distance(x, *p)))
                .sum(),
            Representation::Grid { masses } => {
                let length = self.domain.torus_length().unwrap();
                let dx = length / masses.len() as f64;
                masses
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        let c = [(i as f64 + 0.5) * dx, 0.0];
                        m * k.eval(self.domain.distance(x, c))
                    })
                    .sum()
            }
        }
    }

    /// Convolution of the signed measure `u drho` with a kernel (same quadrature).
    pub fn convolve_weighted(&self, u: &[f64], k: &Kernel, x: Point) -> f64 {
        let pts = self.support_points();
        let m = self.masses();
        pts.iter()
            .zip(m)
            .zip(u)
            .map(|((p, w), uv)| w * uv * k.eval(self.domain.distance(x, *p)))
            .sum()
    }

    /// Total momentum `sum m_i u_i` of a field against the measure.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        self.masses().iter().zip(u).map(|(m, v)| m * v).sum()
    }

    /// Lower a grid measure to atoms at the cell centers (no-op on atomics).
    pub fn to_atomic(&self) -> Measure {
        match &self.repr {
            Representation::Atomic { .. } => self.clone(),
            Representation::Grid { masses } => Measure {
                domain: self.domain,
                repr: Representation::Atomic {
                    points: self.support_points(),
                    weights: masses.clone(),
                },
            },
        }
    }

    /// CSV rows `x,rho(x)` for a grid measure.
    pub fn grid_csv(&self) -> Option<String> {
        let density = self.density()?;
        let dx = self.cell_width()?;
        let mut out = String::from("x,rho\n");
        for (i, d) in density.iter().enumerate() {
            out.push_str(&format!("{},{}\n", (i as f64 + 0.5) * dx, d));
        }
        Some(out)
    }
}

/// Where to evaluate the thickness infimum.
pub enum EvalSet {
    Points(Vec<Point>),
    /// Scan the whole environment on a dense lattice (plus the atoms).
    Domain,
}

/// Ball-thickness: `inf_{x in S} (rho * chi_r)(x)` with the library cutoff.
pub fn ball_thickness(rho: &Measure, r: f64, set: &EvalSet) -> Result<f64, MeasureError> {
    assert!(r > 0.0, "thickness radius must be positive");
    let chi = Kernel::smooth_cutoff(r).expect("r > 0");
    let eval_points: Vec<Point> = match set {
        EvalSet::Points(pts) => {
            if pts.is_empty() {
                return Err(MeasureError::EmptyEvaluationSet);
            }
            pts.clone()
        }
        EvalSet::Domain => {
            let mut pts = rho.support_points();
            if let Some(length) = rho.domain.torus_length() {
                let n = 1024;
                let dx = length / n as f64;
                pts.extend((0..n).map(|i| [(i as f64 + 0.5) * dx, 0.0]));
            }
            pts
        }
    };
    let inf = eval_points
        .iter()
        .map(|&x| rho.convolve(&chi, x))
        .fold(f64::INFINITY, f64::min);
    Ok(inf.clamp(0.0, 1.0))
}
