//! The environmental averaging model zoo.
//!
//! A model is a pair (strength `s_rho`, averaging operator `<.>_rho`)
//! parametrized by a probability measure. All zoo members are material:
//! `kappa_rho = s_rho rho`. The reproducing kernel representation
//! `s <u>(x) = integral phi_rho(x, y) u(y) drho(y)` is available through
//! [`Model::kernel_matrix`] on atomic measures.

pub mod checks;
pub mod partition;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finite::{FiniteError, FiniteModel};
use crate::measures::{Domain, Field, Kernel, KernelProfile, Measure, MeasureError, Point};
use partition::Partition;

/// Mass below which a denominator counts as vacuum.
pub const VACUUM_EPS: f64 = 1e-14;

/// Default quadrature resolution for the over-mollified averaging.
pub const DEFAULT_MPHI_QUADRATURE: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("vacuum evaluation")]
    VacuumEvaluation,
    #[error("operation not supported: {0}")]
    Unsupported(&'static str),
    #[error("rough partition cell {0} carries no mass; average undefined")]
    ZeroMassCell(usize),
    #[error("kernel matrix needs positive atom masses (atom {0})")]
    ZeroMassAtom(usize),
    #[error("atomic instance with {got} atoms exceeds kernel-matrix cap {cap}")]
    TooManyAtoms { got: usize, cap: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Finite(#[from] FiniteError),
}

pub const MAX_KERNEL_MATRIX_ATOMS: usize = 10_000;

/// Declared structural flags (the zoo's summary table).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub conservative: bool,
    pub symmetric: bool,
    pub ball_positive: bool,
    pub galilean: bool,
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    /// `s = 1`, `<u> = integral u drho`.
    Global,
    /// `s = 1`, `<u> = u` on the support.
    Identity,
    /// Favre filtration with strength `rho_phi`.
    CuckerSmale { phi: Kernel },
    /// Favre filtration with unit strength.
    MotschTadmor { phi: Kernel },
    /// Favre filtration with strength `rho_phi^beta`, `beta` in [0, 1].
    Beta { phi: Kernel, beta: f64 },
    /// Over-mollified Favre filtration `((u rho)_phi / rho_phi)_phi`;
    /// `phi` must be a mollifier. Evaluated by fixed-resolution quadrature.
    Overmollified { phi: Kernel, quadrature: usize },
    /// Smooth segregation by a partition of unity.
    Segregation { partition: Partition },
    /// Conditional expectation on a fixed partition of the torus into
    /// intervals; defined on grid measures only. `boundaries` are sorted
    /// cell edges in `[0, L)`.
    RoughPartition { boundaries: Vec<f64> },
    /// Metric-topological kernel `psi(x-y) / (eps + d_rho(x,y)^2)^(alpha/2)`,
    /// `d_rho` the rho-mass of a smoothed symmetric domain connecting x, y.
    Topological { psi: Kernel, alpha: f64, eps_top: f64 },
}

#[derive(Debug, Clone)]
pub struct Model {
    pub kind: ModelKind,
    /// Locality radius of the reproducing kernel when it satisfies the
    /// short-range lower bound.
    pub locality_radius: Option<f64>,
}

/// Reproducing kernel of a model over an atomic measure.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    /// `phi_rho(x_i, x_j)`
    pub phi: DMatrix<f64>,
    pub strength: Vec<f64>,
    pub masses: Vec<f64>,
}

impl KernelMatrix {
    /// `max_i |sum_j m_j phi_ij - s_i|`
    pub fn row_identity_residual(&self) -> f64 {
        let n = self.masses.len();
        (0..n)
            .map(|i| {
                let s: f64 = (0..n).map(|j| self.masses[j] * self.phi[(i, j)]).sum();
                (s - self.strength[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Apply the weighted average: `(s <u>)(x_i) = sum_j m_j phi_ij u_j`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.masses.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.masses[j] * self.phi[(i, j)] * u[j]).sum())
            .collect()
    }

    /// Reduce to a finite model: `A_ij = m_j phi_ij / s_i`, `kappa_i = m_i s_i`.
    pub fn to_finite_model(&self) -> Result<FiniteModel, ModelError> {
        let n = self.masses.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            if self.strength[i] <= 0.0 || self.masses[i] <= 0.0 {
                return Err(ModelError::ZeroMassAtom(i));
            }
            for j in 0..n {
                a[i][j] = self.masses[j] * self.phi[(i, j)] / self.strength[i];
            }
            // absorb quadrature roundoff so the row is exactly stochastic
            let sum: f64 = a[i].iter().sum();
            for x in a[i].iter_mut() {
                *x /= sum;
            }
        }
        let kappa = self
            .masses
            .iter()
            .zip(&self.strength)
            .map(|(m, s)| m * s)
            .collect();
        Ok(FiniteModel::new(kappa, a)?)
    }

    pub fn to_csv(&self) -> String {
        let n = self.masses.len();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| self.phi[(i, j)].to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `rho_phi` at the support points of `rho`.
fn rho_conv(rho: &Measure, phi: &Kernel) -> Vec<f64> {
    rho.support_points()
        .iter()
        .map(|&x| rho.convolve(phi, x))
        .collect()
}

fn weighted_conv(rho: &Measure, u: &[f64], phi: &Kernel) -> Vec<f64> {
    rho.support_points()
        .iter()
        .map(|&x| rho.convolve_weighted(u, phi, x))
        .collect()
}

/// Quadrature nodes and weight for the over-mollified averaging (torus only).
fn torus_quadrature(rho: &Measure, q: usize) -> Result<(Vec<Point>, f64), ModelError> {
    let length = rho
        .domain
        .torus_length()
        .ok_or(ModelError::Unsupported("over-mollified averaging needs a torus"))?;
    let dx = length / q as f64;
    let nodes = (0..q).map(|i| [(i as f64 + 0.5) * dx, 0.0]).collect();
    Ok((nodes, dx))
}

impl Model {
    pub fn global() -> Self {
        Model {
            kind: ModelKind::Global,
            locality_radius: None,
        }
    }

    pub fn identity() -> Self {
        Model {
            kind: ModelKind::Identity,
            locality_radius: None,
        }
    }

    pub fn cucker_smale(phi: Kernel) -> Self {
        let locality_radius = phi.support_radius();
        Model {
            kind: ModelKind::CuckerSmale { phi },
            locality_radius,
        }
    }

    pub fn motsch_tadmor(phi: Kernel) -> Self {
        let locality_radius = phi.support_radius();
        Model {
            kind: ModelKind::MotschTadmor { phi },
            locality_radius,
        }
    }

    pub fn beta(phi: Kernel, beta: f64) -> Self {
        assert!((0.0..=1.0).contains(&beta), "beta must lie in [0, 1]");
        let locality_radius = phi.support_radius();
        Model {
            kind: ModelKind::Beta { phi, beta },
            locality_radius,
        }
    }

    pub fn overmollified(phi: Kernel) -> Self {
        let locality_radius = phi.support_radius().map(|r| 2.0 * r);
        Model {
            kind: ModelKind::Overmollified {
                phi,
                quadrature: DEFAULT_MPHI_QUADRATURE,
            },
            locality_radius,
        }
    }

    pub fn overmollified_with_quadrature(phi: Kernel, quadrature: usize) -> Self {
        let mut m = Self::overmollified(phi);
        if let ModelKind::Overmollified { quadrature: q, .. } = &mut m.kind {
            *q = quadrature;
        }
        m
    }

    pub fn segregation(partition: Partition) -> Self {
        let r = partition.overlap_radius();
        Model {
            kind: ModelKind::Segregation { partition },
            locality_radius: Some(r),
        }
    }

    pub fn rough_partition(boundaries: Vec<f64>) -> Self {
        Model {
            kind: ModelKind::RoughPartition { boundaries },
            locality_radius: None,
        }
    }

    pub fn topological(psi: Kernel, alpha: f64, eps_top: f64) -> Self {
        assert!(eps_top > 0.0, "topological regularization must be positive");
        let locality_radius = psi.support_radius();
        Model {
            kind: ModelKind::Topological { psi, alpha, eps_top },
            locality_radius,
        }
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            ModelKind::Global => "global",
            ModelKind::Identity => "identity",
            ModelKind::CuckerSmale { .. } => "cucker_smale",
            ModelKind::MotschTadmor { .. } => "motsch_tadmor",
            ModelKind::Beta { .. } => "beta",
            ModelKind::Overmollified { .. } => "overmollified",
            ModelKind::Segregation { .. } => "segregation",
            ModelKind::RoughPartition { .. } => "rough_partition",
            ModelKind::Topological { .. } => "topological",
        }
    }

    /// Declared structural flags.
    pub fn flags(&self) -> Flags {
        match &self.kind {
            ModelKind::Global | ModelKind::Identity => Flags {
                conservative: true,
                symmetric: true,
                ball_positive: true,
                galilean: true,
            },
            ModelKind::CuckerSmale { phi } => Flags {
                conservative: true,
                symmetric: true,
                ball_positive: phi.is_bochner_positive(),
                galilean: true,
            },
            ModelKind::MotschTadmor { .. } => Flags {
                conservative: false,
                symmetric: false,
                ball_positive: false,
                galilean: true,
            },
            ModelKind::Beta { phi, beta } => {
                if *beta == 1.0 {
                    Model::cucker_smale(phi.clone()).flags()
                } else {
                    Flags {
                        conservative: false,
                        symmetric: false,
                        ball_positive: false,
                        galilean: true,
                    }
                }
            }
            ModelKind::Overmollified { .. } => Flags {
                conservative: true,
                symmetric: true,
                ball_positive: true,
                galilean: true,
            },
            ModelKind::Segregation { .. } | ModelKind::RoughPartition { .. } => Flags {
                conservative: true,
                symmetric: true,
                ball_positive: true,
                galilean: false,
            },
            ModelKind::Topological { .. } => Flags {
                conservative: true,
                symmetric: true,
                ball_positive: false,
                galilean: true,
            },
        }
    }

    /// Declared uniform bound on the strength function.
    pub fn strength_bound(&self) -> f64 {
        match &self.kind {
            ModelKind::CuckerSmale { phi } => phi.eval(0.0),
            ModelKind::Beta { phi, beta } => phi.eval(0.0).powf(*beta).max(1.0),
            ModelKind::Topological { psi, alpha, eps_top } => {
                psi.eval(0.0) * eps_top.powf(-alpha / 2.0)
            }
            _ => 1.0,
        }
    }

    /// `s_rho` on the carrier of `rho`.
    pub fn strength(&self, rho: &Measure) -> Result<Field, ModelError> {
        let n = rho.support_len();
        match &self.kind {
            ModelKind::Global
            | ModelKind::Identity
            | ModelKind::MotschTadmor { .. }
            | ModelKind::Overmollified { .. }
            | ModelKind::Segregation { .. }
            | ModelKind::RoughPartition { .. } => Ok(vec![1.0; n]),
            ModelKind::CuckerSmale { phi } => Ok(rho_conv(rho, phi)),
            ModelKind::Beta { phi, beta } => {
                Ok(rho_conv(rho, phi).into_iter().map(|v| v.powf(*beta)).collect())
            }
            ModelKind::Topological { .. } => {
                let m = rho.masses();
                let phi = self.topological_kernel(rho)?;
                Ok((0..n)
                    .map(|i| (0..n).map(|j| m[j] * phi[(i, j)]).sum())
                    .collect())
            }
        }
    }

    /// `<u>_rho` on the carrier of `rho`.
    pub fn average(&self, rho: &Measure, u: &Field) -> Result<Field, ModelError> {
        rho.check_field(u)?;
        let n = rho.support_len();
        match &self.kind {
            ModelKind::Global => {
                let mean = rho.integrate(u);
                Ok(vec![mean; n])
            }
            ModelKind::Identity => Ok(u.clone()),
            ModelKind::CuckerSmale { phi }
            | ModelKind::MotschTadmor { phi }
            | ModelKind::Beta { phi, .. } => {
                let den = rho_conv(rho, phi);
                if den.iter().any(|&d| d < VACUUM_EPS) {
                    return Err(ModelError::VacuumEvaluation);
                }
                let num = weighted_conv(rho, u, phi);
                Ok(num.into_iter().zip(den).map(|(a, b)| a / b).collect())
            }
            ModelKind::Overmollified { phi, quadrature } => {
                let (nodes, dx) = torus_quadrature(rho, *quadrature)?;
                let favre: Result<Vec<f64>, ModelError> = nodes
                    .iter()
                    .map(|&z| {
                        let den = rho.convolve(phi, z);
                        if den < VACUUM_EPS {
                            return Err(ModelError::VacuumEvaluation);
                        }
                        Ok(rho.convolve_weighted(u, phi, z) / den)
                    })
                    .collect();
                let favre = favre?;
                let pts = rho.support_points();
                Ok(pts
                    .iter()
                    .map(|&x| {
                        nodes
                            .iter()
                            .zip(&favre)
                            .map(|(&z, f)| phi.eval(rho.domain.distance(x, z)) * f * dx)
                            .sum()
                    })
                    .collect())
            }
            ModelKind::Segregation { partition } => {
                let pts = rho.support_points();
                let m = rho.masses();
                let l = partition.len();
                let mut mass_g = vec![0.0; l];
                let mut mom_g = vec![0.0; l];
                for (i, &p) in pts.iter().enumerate() {
                    let g = partition.eval_all(p);
                    for k in 0..l {
                        mass_g[k] += m[i] * g[k];
                        mom_g[k] += m[i] * u[i] * g[k];
                    }
                }
                pts.iter()
                    .map(|&p| {
                        let g = partition.eval_all(p);
                        let mut acc = 0.0;
                        for k in 0..l {
                            if mass_g[k] < VACUUM_EPS {
                                if g[k] > VACUUM_EPS {
                                    return Err(ModelError::VacuumEvaluation);
                                }
                                // 0/0 guarded to 0 where the neighborhood is empty
                                continue;
                            }
                            acc += g[k] * mom_g[k] / mass_g[k];
                        }
                        Ok(acc)
                    })
                    .collect()
            }
            ModelKind::RoughPartition { boundaries } => {
                let dx = rho
                    .cell_width()
                    .ok_or(ModelError::Unsupported("rough partition needs a grid measure"))?;
                let _ = dx;
                let pts = rho.support_points();
                let m = rho.masses();
                let cell_of = |x: f64| -> usize {
                    // boundaries sorted in [0, L); cell l spans
                    // [boundaries[l], boundaries[l+1])
                    match boundaries.binary_search_by(|b| b.total_cmp(&x)) {
                        Ok(i) => i,
                        Err(0) => boundaries.len() - 1,
                        Err(i) => i - 1,
                    }
                };
                let l = boundaries.len();
                let mut mass = vec![0.0; l];
                let mut mom = vec![0.0; l];
                for (i, &p) in pts.iter().enumerate() {
                    let c = cell_of(p[0]);
                    mass[c] += m[i];
                    mom[c] += m[i] * u[i];
                }
                if let Some(empty) = mass.iter().position(|&w| w < VACUUM_EPS) {
                    return Err(ModelError::ZeroMassCell(empty));
                }
                Ok(pts.iter().map(|&p| {
                    let c = cell_of(p[0]);
                    mom[c] / mass[c]
                }).collect())
            }
            ModelKind::Topological { .. } => {
                let pts = rho.support_points();
                let m = rho.masses();
                let phi = self.topological_kernel(rho)?;
                (0..pts.len())
                    .map(|i| {
                        let den: f64 = (0..pts.len()).map(|j| m[j] * phi[(i, j)]).sum();
                        if den < VACUUM_EPS {
                            return Err(ModelError::VacuumEvaluation);
                        }
                        let num: f64 =
                            (0..pts.len()).map(|j| m[j] * phi[(i, j)] * u[j]).sum();
                        Ok(num / den)
                    })
                    .collect()
            }
        }
    }

    /// `s_rho <u>_rho` on the carrier, avoiding vacuous divisions where the
    /// product form is globally defined (Cucker-Smale).
    pub fn weighted_average(&self, rho: &Measure, u: &Field) -> Result<Field, ModelError> {
        match &self.kind {
            ModelKind::CuckerSmale { phi } => {
                rho.check_field(u)?;
                Ok(weighted_conv(rho, u, phi))
            }
            ModelKind::Beta { phi, beta } => {
                rho.check_field(u)?;
                let den = rho_conv(rho, phi);
                if *beta < 1.0 && den.iter().any(|&d| d < VACUUM_EPS) {
                    return Err(ModelError::VacuumEvaluation);
                }
                let num = weighted_conv(rho, u, phi);
                Ok(num
                    .into_iter()
                    .zip(den)
                    .map(|(a, b)| if *beta == 1.0 { a } else { a / b.powf(1.0 - beta) })
                    .collect())
            }
            _ => {
                let s = self.strength(rho)?;
                let a = self.average(rho, u)?;
                Ok(s.into_iter().zip(a).map(|(x, y)| x * y).collect())
            }
        }
    }

    /// Strength at an arbitrary point (kernel models only).
    pub fn strength_at(&self, rho: &Measure, x: Point) -> Result<f64, ModelError> {
        match &self.kind {
            ModelKind::Global | ModelKind::Identity | ModelKind::MotschTadmor { .. } => Ok(1.0),
            ModelKind::CuckerSmale { phi } => Ok(rho.convolve(phi, x)),
            ModelKind::Beta { phi, beta } => Ok(rho.convolve(phi, x).powf(*beta)),
            _ => Err(ModelError::Unsupported(
                "pointwise strength only available for convolution models",
            )),
        }
    }

    /// Weighted average at an arbitrary point (convolution models only).
    pub fn weighted_average_at(
        &self,
        rho: &Measure,
        u: &Field,
        x: Point,
    ) -> Result<f64, ModelError> {
        rho.check_field(u)?;
        match &self.kind {
            ModelKind::Global => Ok(rho.integrate(u)),
            ModelKind::CuckerSmale { phi } => Ok(rho.convolve_weighted(u, phi, x)),
            ModelKind::MotschTadmor { phi } => {
                let den = rho.convolve(phi, x);
                if den < VACUUM_EPS {
                    return Err(ModelError::VacuumEvaluation);
                }
                Ok(rho.convolve_weighted(u, phi, x) / den)
            }
            ModelKind::Beta { phi, beta } => {
                let den = rho.convolve(phi, x);
                if *beta < 1.0 && den < VACUUM_EPS {
                    return Err(ModelError::VacuumEvaluation);
                }
                let num = rho.convolve_weighted(u, phi, x);
                Ok(if *beta == 1.0 {
                    num
                } else {
                    num / den.powf(1.0 - beta)
                })
            }
            _ => Err(ModelError::Unsupported(
                "pointwise averaging only available for convolution models",
            )),
        }
    }

    fn topological_kernel(&self, rho: &Measure) -> Result<DMatrix<f64>, ModelError> {
        let ModelKind::Topological { psi, alpha, eps_top } = &self.kind else {
            unreachable!()
        };
        let pts = rho.support_points();
        let m = rho.masses();
        let n = pts.len();
        let domain = rho.domain;
        // smoothed indicator of the symmetric domain connecting x and y:
        // 1D minimal arc (plateau on the arc, decay over one arc half-width);
        // 2D ellipse with foci x, y and eccentricity margin 0.2
        let chi = |x: Point, y: Point, z: Point| -> f64 {
            let d = domain.distance(x, y).max(1e-12);
            if domain.dim() == 1 {
                let mid = {
                    let delta = domain.delta(y, x);
                    domain.wrap([x[0] + 0.5 * delta[0], 0.0])
                };
                let t = domain.distance(z, mid);
                crate::measures::kernel::smooth_cutoff_profile(t / d)
            } else {
                let s = domain.distance(z, x) + domain.distance(z, y);
                crate::measures::kernel::smooth_cutoff_profile(s / (2.4 * d))
            }
        };
        let mut phi = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let d_top: f64 = (0..n)
                    .map(|k| m[k] * chi(pts[i], pts[j], pts[k]))
                    .sum();
                let v = psi.eval(domain.distance(pts[i], pts[j]))
                    / (eps_top + d_top * d_top).powf(alpha / 2.0);
                phi[(i, j)] = v;
                phi[(j, i)] = v;
            }
        }
        Ok(phi)
    }

    /// Reproducing kernel matrix over an atomic measure.
    pub fn kernel_matrix(&self, rho: &Measure) -> Result<KernelMatrix, ModelError> {
        if !rho.is_atomic() {
            return Err(ModelError::Unsupported("kernel matrix needs an atomic measure"));
        }
        let pts = rho.support_points();
        let n = pts.len();
        if n > MAX_KERNEL_MATRIX_ATOMS {
            return Err(ModelError::TooManyAtoms {
                got: n,
                cap: MAX_KERNEL_MATRIX_ATOMS,
            });
        }
        let masses = rho.masses().to_vec();
        let strength = self.strength(rho)?;
        let domain = rho.domain;
        let phi = match &self.kind {
            ModelKind::Global => DMatrix::from_element(n, n, 1.0),
            ModelKind::Identity => {
                let mut p = DMatrix::zeros(n, n);
                for i in 0..n {
                    if masses[i] <= 0.0 {
                        return Err(ModelError::ZeroMassAtom(i));
                    }
                    p[(i, i)] = 1.0 / masses[i];
                }
                p
            }
            ModelKind::CuckerSmale { phi } => {
                DMatrix::from_fn(n, n, |i, j| phi.eval(domain.distance(pts[i], pts[j])))
            }
            ModelKind::MotschTadmor { phi } => {
                let den = rho_conv(rho, phi);
                if den.iter().any(|&d| d < VACUUM_EPS) {
                    return Err(ModelError::VacuumEvaluation);
                }
                DMatrix::from_fn(n, n, |i, j| {
                    phi.eval(domain.distance(pts[i], pts[j])) / den[i]
                })
            }
            ModelKind::Beta { phi, beta } => {
                let den = rho_conv(rho, phi);
                if *beta < 1.0 && den.iter().any(|&d| d < VACUUM_EPS) {
                    return Err(ModelError::VacuumEvaluation);
                }
                DMatrix::from_fn(n, n, |i, j| {
                    phi.eval(domain.distance(pts[i], pts[j])) / den[i].powf(1.0 - beta)
                })
            }
            ModelKind::Overmollified { phi, quadrature } => {
                let (nodes, dx) = torus_quadrature(rho, *quadrature)?;
                let den: Vec<f64> = nodes.iter().map(|&z| rho.convolve(phi, z)).collect();
                if den.iter().any(|&d| d < VACUUM_EPS) {
                    return Err(ModelError::VacuumEvaluation);
                }
                // cache phi(x_i - z_q)
                let conv: Vec<Vec<f64>> = pts
                    .iter()
                    .map(|&p| {
                        nodes
                            .iter()
                            .map(|&z| phi.eval(domain.distance(p, z)))
                            .collect()
                    })
                    .collect();
                DMatrix::from_fn(n, n, |i, j| {
                    nodes
                        .iter()
                        .enumerate()
                        .map(|(q, _)| conv[i][q] * conv[j][q] / den[q] * dx)
                        .sum()
                })
            }
            ModelKind::Segregation { partition } => {
                let l = partition.len();
                let g: Vec<Vec<f64>> = pts.iter().map(|&p| partition.eval_all(p)).collect();
                let mut mass_g = vec![0.0; l];
                for (i, gi) in g.iter().enumerate() {
                    for k in 0..l {
                        mass_g[k] += masses[i] * gi[k];
                    }
                }
                let mut p = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let mut acc = 0.0;
                        for k in 0..l {
                            if mass_g[k] < VACUUM_EPS {
                                if g[i][k] > VACUUM_EPS && g[j][k] > VACUUM_EPS {
                                    return Err(ModelError::VacuumEvaluation);
                                }
                                continue;
                            }
                            acc += g[i][k] * g[j][k] / mass_g[k];
                        }
                        p[(i, j)] = acc;
                        p[(j, i)] = acc;
                    }
                }
                p
            }
            ModelKind::RoughPartition { .. } => {
                return Err(ModelError::Unsupported(
                    "rough partition is defined on grid measures only",
                ))
            }
            ModelKind::Topological { .. } => self.topological_kernel(rho)?,
        };
        Ok(KernelMatrix {
            phi,
            strength,
            masses,
        })
    }

    /// One-line kernel formula for this model.
    pub fn kernel_formula(&self) -> &'static str {
        match &self.kind {
            ModelKind::Global => "phi_rho(x,y) = 1",
            ModelKind::Identity => "phi_rho(x,y) = delta(x-y)/rho",
            ModelKind::CuckerSmale { .. } => "phi_rho(x,y) = phi(x-y)",
            ModelKind::MotschTadmor { .. } => "phi_rho(x,y) = phi(x-y) / rho_phi(x)",
            ModelKind::Beta { .. } => "phi_rho(x,y) = phi(x-y) / rho_phi(x)^(1-beta)",
            ModelKind::Overmollified { .. } => {
                "phi_rho(x,y) = integral phi(x-z) phi(y-z) / rho_phi(z) dz"
            }
            ModelKind::Segregation { .. } => {
                "phi_rho(x,y) = sum_l g_l(x) g_l(y) / rho(g_l)"
            }
            ModelKind::RoughPartition { .. } => {
                "phi_rho(x,y) = sum_l 1_Al(x) 1_Al(y) / rho(A_l)"
            }
            ModelKind::Topological { .. } => {
                "phi_rho(x,y) = psi(x-y) / (eps + d_rho(x,y)^2)^(alpha/2)"
            }
        }
    }
}

impl Kernel {
    /// Whether the kernel is a self-convolution of a non-negative profile.
    pub fn is_bochner_positive(&self) -> bool {
        matches!(
            self.profile,
            KernelProfile::Gaussian { .. }
                | KernelProfile::BochnerGaussian { .. }
                | KernelProfile::BochnerTent { .. }
                | KernelProfile::Tabulated { .. }
        )
    }
}

/// Make an atomic measure a model can be evaluated on from bare positions.
pub fn empirical_measure(domain: Domain, positions: &[f64]) -> Result<Measure, MeasureError> {
    Measure::empirical(domain, positions.iter().map(|&x| [x, 0.0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Domain;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_atomic(n: usize, seed: u64) -> Measure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), 0.0]).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.1).collect();
        Measure::atomic_normalized(Domain::torus(1.0), pts, w).unwrap()
    }

    fn zoo(seed: u64) -> Vec<Model> {
        let phi = Kernel::gaussian(0.15, 1).unwrap();
        let _ = seed;
        vec![
            Model::global(),
            Model::identity(),
            Model::cucker_smale(phi.clone()),
            Model::motsch_tadmor(phi.clone()),
            Model::beta(phi.clone(), 0.5),
            Model::overmollified(Kernel::gaussian(0.06, 1).unwrap()),
            Model::segregation(Partition::uniform(1.0, 3)),
            Model::topological(Kernel::gaussian(0.2, 1).unwrap(), 1.0, 0.1),
        ]
    }

    #[test]
    fn global_strength_is_one_everywhere() {
        let rho = random_atomic(5, 1);
        let s = Model::global().strength(&rho).unwrap();
        assert!(s.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cs_single_atom_strength_is_phi_zero() {
        let rho = Measure::atomic(Domain::torus(1.0), vec![[0.0, 0.0]], vec![1.0]).unwrap();
        let phi = Kernel::gaussian(0.1, 1).unwrap();
        let m = Model::cucker_smale(phi.clone());
        let s = m.strength(&rho).unwrap();
        assert!((s[0] - phi.eval(0.0)).abs() < 1e-14);
    }

    #[test]
    fn beta_half_two_equal_atoms() {
        let d = 0.2;
        let rho = Measure::atomic(
            Domain::torus(1.0),
            vec![[0.0, 0.0], [d, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let phi = Kernel::gaussian(0.1, 1).unwrap();
        let m = Model::beta(phi.clone(), 0.5);
        let s = m.strength(&rho).unwrap();
        let expected = (0.5 * phi.eval(0.0) + 0.5 * phi.eval(d)).sqrt();
        assert!((s[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn constants_are_fixed_points_of_every_average() {
        let rho = random_atomic(12, 2);
        let u = vec![3.25; 12];
        for m in zoo(0) {
            if matches!(m.kind, ModelKind::RoughPartition { .. }) {
                continue;
            }
            let a = m.average(&rho, &u).unwrap();
            for v in &a {
                assert!((v - 3.25).abs() < 1e-9, "model {} broke <c> = c: {v}", m.name());
            }
        }
    }

    #[test]
    fn maximum_principle_on_random_fields() {
        let rho = random_atomic(15, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u: Vec<f64> = (0..15).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for m in zoo(0) {
            if matches!(m.kind, ModelKind::RoughPartition { .. }) {
                continue;
            }
            let a = m.average(&rho, &u).unwrap();
            for v in &a {
                assert!(
                    *v >= lo - 1e-9 && *v <= hi + 1e-9,
                    "model {} violated the maximum principle",
                    m.name()
                );
            }
        }
    }

    #[test]
    fn global_average_is_total_momentum() {
        let rho = Measure::atomic(
            Domain::torus(1.0),
            vec![[0.1, 0.0], [0.7, 0.0]],
            vec![0.3, 0.7],
        )
        .unwrap();
        let u = vec![2.0, -1.0];
        let a = Model::global().average(&rho, &u).unwrap();
        let expected = 0.3 * 2.0 + 0.7 * (-1.0);
        assert!((a[0] - expected).abs() < 1e-15);
        assert!((a[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn segregation_single_community_support() {
        // rho supported in supp g_1 only; average must reduce to the
        // one-community Favre value wherever g_2 vanishes
        let partition = Partition::uniform(1.0, 2);
        let m = Model::segregation(partition.clone());
        // atoms deep inside neighborhood 0 (center 0.25)
        let rho = Measure::atomic_normalized(
            Domain::torus(1.0),
            vec![[0.2, 0.0], [0.25, 0.0], [0.3, 0.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let u = vec![1.0, 2.0, 4.0];
        let a = m.average(&rho, &u).unwrap();
        // direct evaluation of the segregation sum on this 3-atom instance
        let pts = [[0.2, 0.0], [0.25, 0.0], [0.3, 0.0]];
        let w = 1.0 / 3.0;
        let mut mass = [0.0, 0.0];
        let mut mom = [0.0, 0.0];
        for (i, p) in pts.iter().enumerate() {
            for l in 0..2 {
                let g = partition.eval(l, *p);
                mass[l] += w * g;
                mom[l] += w * u[i] * g;
            }
        }
        for (i, p) in pts.iter().enumerate() {
            let mut expected = 0.0;
            for l in 0..2 {
                if mass[l] > 1e-14 {
                    expected += partition.eval(l, *p) * mom[l] / mass[l];
                }
            }
            assert!((a[i] - expected).abs() < 1e-12, "atom {i}");
        }
    }

    #[test]
    fn kernel_matrix_row_identity_all_models() {
        let rho = random_atomic(8, 5);
        for m in zoo(0) {
            if matches!(m.kind, ModelKind::RoughPartition { .. }) {
                continue;
            }
            let km = m.kernel_matrix(&rho).unwrap();
            let res = km.row_identity_residual();
            assert!(res < 1e-9, "model {} row identity residual {res}", m.name());
        }
    }

    #[test]
    fn kernel_matrix_reproduces_average() {
        let rho = random_atomic(8, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let u: Vec<f64> = (0..8).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        for m in zoo(0) {
            if matches!(m.kind, ModelKind::RoughPartition { .. }) {
                continue;
            }
            let km = m.kernel_matrix(&rho).unwrap();
            let via_matrix = km.apply(&u);
            let s = m.strength(&rho).unwrap();
            let a = m.average(&rho, &u).unwrap();
            for i in 0..8 {
                assert!(
                    (via_matrix[i] - s[i] * a[i]).abs() < 1e-9,
                    "model {} at atom {i}: {} vs {}",
                    m.name(),
                    via_matrix[i],
                    s[i] * a[i]
                );
            }
        }
    }

    #[test]
    fn cs_kernel_matrix_is_symmetric_mt_is_not() {
        let rho = random_atomic(6, 7);
        let phi = Kernel::gaussian(0.12, 1).unwrap();
        let cs = Model::cucker_smale(phi.clone()).kernel_matrix(&rho).unwrap();
        let mt = Model::motsch_tadmor(phi).kernel_matrix(&rho).unwrap();
        let mut cs_asym = 0.0f64;
        let mut mt_asym = 0.0f64;
        for i in 0..6 {
            for j in 0..6 {
                cs_asym = cs_asym.max((cs.phi[(i, j)] - cs.phi[(j, i)]).abs());
                mt_asym = mt_asym.max((mt.phi[(i, j)] - mt.phi[(j, i)]).abs());
            }
        }
        assert!(cs_asym < 1e-12);
        assert!(mt_asym > 1e-6);
    }

    #[test]
    fn segregation_kernel_matrix_symmetric() {
        let rho = random_atomic(5, 8);
        let m = Model::segregation(Partition::uniform(1.0, 3));
        let km = m.kernel_matrix(&rho).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((km.phi[(i, j)] - km.phi[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_like_stall_for_single_agent() {
        let rho = Measure::atomic(Domain::torus(1.0), vec![[0.4, 0.0]], vec![1.0]).unwrap();
        let m = Model::identity();
        let u = vec![-0.7];
        let a = m.average(&rho, &u).unwrap();
        assert_eq!(a[0], -0.7);
    }

    #[test]
    fn vacuum_evaluation_detected() {
        // compactly supported kernel, grid with an empty half
        let domain = Domain::torus(1.0);
        let mut density = vec![0.0; 64];
        for d in density.iter_mut().take(16) {
            *d = 1.0;
        }
        let rho = Measure::grid_from_density(domain, &density).unwrap();
        let phi = Kernel::bump(0.05).unwrap();
        let mt = Model::motsch_tadmor(phi);
        let u = vec![1.0; 64];
        assert_eq!(mt.average(&rho, &u), Err(ModelError::VacuumEvaluation));
    }

    #[test]
    fn galilean_shift_reproduces_average() {
        // translation-invariant models on the line: shift positions by h,
        // averages shift along
        let domain = Domain::line();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<[f64; 2]> = (0..10).map(|_| [rng.gen::<f64>(), 0.0]).collect();
        let w: Vec<f64> = (0..10).map(|_| rng.gen::<f64>() + 0.1).collect();
        let rho = Measure::atomic_normalized(domain, pts.clone(), w.clone()).unwrap();
        let h = 0.37;
        let shifted: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] + h, 0.0]).collect();
        let rho_h = Measure::atomic_normalized(domain, shifted, w).unwrap();
        let u: Vec<f64> = (0..10).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let phi = Kernel::gaussian(0.2, 1).unwrap();
        for m in [
            Model::global(),
            Model::cucker_smale(phi.clone()),
            Model::motsch_tadmor(phi.clone()),
            Model::beta(phi, 0.3),
        ] {
            let a = m.average(&rho, &u).unwrap();
            let ah = m.average(&rho_h, &u).unwrap();
            for i in 0..10 {
                assert!(
                    (a[i] - ah[i]).abs() < 1e-12,
                    "model {} not Galilean at atom {i}",
                    m.name()
                );
            }
        }
    }

    #[test]
    fn rough_partition_errors_on_empty_cell() {
        let domain = Domain::torus(1.0);
        let mut density = vec![0.0; 64];
        for d in density.iter_mut().take(32) {
            *d = 1.0;
        }
        let rho = Measure::grid_from_density(domain, &density).unwrap();
        let m = Model::rough_partition(vec![0.0, 0.25, 0.5, 0.75]);
        let u = vec![1.0; 64];
        assert!(matches!(
            m.average(&rho, &u),
            Err(ModelError::ZeroMassCell(_))
        ));
    }

    #[test]
    fn rough_partition_on_full_grid() {
        let domain = Domain::torus(1.0);
        let rho = Measure::uniform_grid(domain, 64).unwrap();
        let m = Model::rough_partition(vec![0.0, 0.5]);
        let u: Vec<f64> = (0..64).map(|i| if i < 32 { 1.0 } else { 3.0 }).collect();
        let a = m.average(&rho, &u).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-12);
        assert!((a[63] - 3.0).abs() < 1e-12);
    }
}
