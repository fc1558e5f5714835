//! Spectral-gap machinery: the three kappa-energies, alignment gaps, and
//! low-energy lower bounds checked against eigensolver ground truth.

pub mod calibration;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::finite::{constrained_form_extremum, spectral_gap_finite, GapSubspace};
use crate::measures::{ball_thickness, EvalSet, Field, Kernel, Measure};
use crate::models::{Model, ModelError, ModelKind};

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("low-energy method inapplicable")]
    Inapplicable,
    #[error("flatness gap inapplicable: c0 * max(rho/rho_phi) >= 1")]
    FlatnessInapplicable,
    #[error("model has no locality radius; thickness law undefined")]
    NoLocalityRadius,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The hierarchy `E0 = (u,u)_kappa >= E1 = (u,<u>)_kappa >= E2 = (<u>,<u>)_kappa`.
pub fn energies(model: &Model, rho: &Measure, u: &Field) -> Result<(f64, f64, f64), ModelError> {
    let s = model.strength(rho)?;
    let au = model.average(rho, u)?;
    let m = rho.masses();
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        m.iter()
            .zip(&s)
            .zip(a.iter().zip(b))
            .map(|((m, s), (x, y))| m * s * x * y)
            .sum()
    };
    Ok((dot(u, u), dot(u, &au), dot(&au, &au)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapFlavor {
    /// `1 - sup (u, <u>)_kappa` over zero-momentum unit fields.
    NumericalRange,
    /// Variational second eigenvalue of the alignment operator
    /// `L u = s (u - <u>)` in `L^2(rho)`.
    VariationalLambda,
}

/// Spectral gap of a model over a measure, through the finite reduction.
pub fn spectral_gap(model: &Model, rho: &Measure, flavor: GapFlavor) -> Result<f64, SpectralError> {
    let atoms = rho.to_atomic();
    let km = model.kernel_matrix(&atoms)?;
    let masses = atoms.masses().to_vec();
    match flavor {
        GapFlavor::NumericalRange => {
            let fm = km.to_finite_model()?;
            Ok(spectral_gap_finite(&fm, &GapSubspace::ZeroMomentum(masses)))
        }
        GapFlavor::VariationalLambda => {
            let n = masses.len();
            // (u, L u)_rho = u^T (W - M) u with W = diag(m_i s_i) and
            // M_ij = m_i m_j phi_ij (the kernel-weighted coupling)
            let mut form = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    form[(i, j)] = -masses[i] * masses[j] * km.phi[(i, j)];
                }
                form[(i, i)] += masses[i] * km.strength[i];
            }
            Ok(constrained_form_extremum(&form, &masses, &masses, false))
        }
    }
}

/// Thickness law behind a low-energy bound.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ThicknessLaw {
    pub name: &'static str,
    pub radius: f64,
    pub exponent: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub a0: f64,
    pub a1: f64,
    pub eps_measured: f64,
    pub eps_bound: f64,
    pub lambda_measured: f64,
    pub thickness: f64,
    pub law: ThicknessLaw,
    pub holds: bool,
}

/// Radius where the kernel first drops to half its peak.
pub fn half_height_radius(k: &Kernel) -> f64 {
    let peak = k.eval(0.0);
    let mut hi = k.support_radius().unwrap_or(50.0);
    if k.eval(hi) > 0.5 * peak {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if k.eval(mid) > 0.5 * peak {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn thickness_law(model: &Model, rho: &Measure) -> Result<ThicknessLaw, SpectralError> {
    match &model.kind {
        ModelKind::Overmollified { phi, .. } => Ok(ThicknessLaw {
            name: "overmollified",
            radius: half_height_radius(phi),
            exponent: 1.0,
            coefficient: calibration::MPHI_GAP_COEFF,
        }),
        ModelKind::CuckerSmale { phi } if phi.is_bochner_positive() => Ok(ThicknessLaw {
            name: "cs_bochner",
            radius: half_height_radius(phi),
            exponent: 3.0,
            coefficient: calibration::CS_GAP_COEFF,
        }),
        ModelKind::Segregation { partition } => Ok(ThicknessLaw {
            name: "segregation",
            radius: partition.overlap_radius(),
            exponent: 2.0 * partition.len() as f64,
            coefficient: calibration::SEG_GAP_COEFF,
        }),
        ModelKind::Beta { phi, .. } if phi.is_bochner_positive() => {
            // near-uniform density premise of the beta-model bound
            let density = rho
                .density()
                .ok_or(SpectralError::Inapplicable)?;
            let length = rho.domain.torus_length().ok_or(SpectralError::Inapplicable)?;
            let dx = length / density.len() as f64;
            let l1: f64 = density
                .iter()
                .map(|d| (d - 1.0 / length).abs() * dx)
                .sum();
            if l1 > calibration::MB_NEAR_UNIFORM_DELTA {
                return Err(SpectralError::Inapplicable);
            }
            Ok(ThicknessLaw {
                name: "beta_near_uniform",
                radius: half_height_radius(phi),
                exponent: 0.0,
                coefficient: calibration::MB_GAP_COEFF,
            })
        }
        _ => Err(SpectralError::Inapplicable),
    }
}

/// Low-energy lower bound on the spectral gap, with the eigensolver value.
pub fn low_energy_bounds(model: &Model, rho: &Measure) -> Result<GapReport, SpectralError> {
    let law = thickness_law(model, rho)?;
    let thickness = ball_thickness(rho, law.radius, &EvalSet::Domain).expect("domain eval");
    let eps_bound = law.coefficient * thickness.powf(law.exponent);
    let eps_measured = spectral_gap(model, rho, GapFlavor::NumericalRange)?;
    let lambda_measured = spectral_gap(model, rho, GapFlavor::VariationalLambda)?;
    // seeded zero-momentum probe for the energy snapshot
    let atoms = rho.to_atomic();
    let n = atoms.support_len();
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9a9);
    let mut u: Field = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    let mean = atoms.integrate(&u);
    for x in u.iter_mut() {
        *x -= mean;
    }
    let (e0, e1, e2) = energies(model, &atoms, &u)?;
    Ok(GapReport {
        e0,
        e1,
        e2,
        a0: e0 - e1,
        a1: e1 - e2,
        eps_measured,
        eps_bound,
        lambda_measured,
        thickness,
        law,
        holds: eps_measured >= eps_bound,
    })
}

/// Fourier flatness gap for the Cucker-Smale model on a grid density:
/// `eps = 1 - c0 * max(rho / rho_phi)` with `c0` the largest non-zero
/// Fourier coefficient of the mollifier.
pub fn cs_flatness_gap(rho: &Measure, phi: &Kernel) -> Result<f64, SpectralError> {
    let density = rho.density().ok_or(SpectralError::Inapplicable)?;
    let length = rho.domain.torus_length().ok_or(SpectralError::Inapplicable)?;
    let n = density.len();
    let dx = length / n as f64;
    // kernel samples on the grid via minimal image
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) * dx;
            let d = rho.domain.distance([x, 0.0], [0.0, 0.0]);
            phi.eval(d)
        })
        .collect();
    let c0 = fourier_max_nonzero(&samples, dx);
    let pts = rho.support_points();
    let mut worst = 0.0f64;
    for (i, &x) in pts.iter().enumerate() {
        let rp = rho.convolve(phi, x);
        if rp <= 0.0 {
            return Err(SpectralError::FlatnessInapplicable);
        }
        worst = worst.max(density[i] / rp);
    }
    let eps = 1.0 - c0 * worst;
    if eps > 0.0 {
        Ok(eps)
    } else {
        Err(SpectralError::FlatnessInapplicable)
    }
}

/// `sup_{k != 0} |phi_hat(k)|` over the grid's resolvable modes.
fn fourier_max_nonzero(samples: &[f64], dx: f64) -> f64 {
    let n = samples.len();
    let mut worst = 0.0f64;
    for k in 1..=(n / 2) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &v) in samples.iter().enumerate() {
            let phase = -std::f64::consts::TAU * (k * j) as f64 / n as f64;
            re += v * phase.cos();
            im += v * phase.sin();
        }
        worst = worst.max((re * dx).hypot(im * dx));
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct MtGapReport {
    pub condition_holds: bool,
    pub variation: f64,
    pub threshold: f64,
    pub lambda_predicted: f64,
    pub lambda_measured: f64,
}

/// Small-variation condition and predicted alignment gap for the
/// Motsch-Tadmor model on a grid density.
pub fn mt_gap_condition(rho: &Measure, phi: &Kernel) -> Result<MtGapReport, SpectralError> {
    let density = rho.density().ok_or(SpectralError::Inapplicable)?;
    let rho_plus = density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rho_minus = density.iter().cloned().fold(f64::INFINITY, f64::min);
    let variation = rho_plus - rho_minus;
    let threshold = calibration::MT_VARIATION_COEFF * rho_minus.powi(3) / rho_plus;
    let lambda_predicted =
        calibration::MT_LAMBDA_COEFF * rho_minus * rho_minus / rho_plus;
    let model = Model::motsch_tadmor(phi.clone());
    let lambda_measured = spectral_gap(&model, rho, GapFlavor::VariationalLambda)?;
    Ok(MtGapReport {
        condition_holds: variation <= threshold,
        variation,
        threshold,
        lambda_predicted,
        lambda_measured,
    })
}

/// Seeded random grid densities for gap surveys: smooth Fourier modes plus
/// occasional bump concentrations, floored away from vacuum.
pub fn random_grid_density(cells: usize, length: f64, seed: u64) -> Vec<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let modes = 1 + (seed % 4) as usize;
    let mut coeffs = Vec::new();
    for k in 1..=modes {
        coeffs.push((k, rng.gen::<f64>() * 0.8, rng.gen::<f64>() * std::f64::consts::TAU));
    }
    let bump = if seed % 3 == 0 {
        Some((rng.gen::<f64>() * length, 0.03 + rng.gen::<f64>() * 0.1, rng.gen::<f64>() * 4.0))
    } else {
        None
    };
    (0..cells)
        .map(|i| {
            let x = (i as f64 + 0.5) * length / cells as f64;
            let mut v = 1.0;
            for (k, a, phase) in &coeffs {
                v += a * (std::f64::consts::TAU * *k as f64 * x / length + phase).cos()
                    / (1.0 + *k as f64);
            }
            if let Some((c, w, h)) = bump {
                let d = (x - c).abs().min(length - (x - c).abs());
                v += h * (-d * d / (2.0 * w * w)).exp();
            }
            v.max(0.05)
        })
        .collect()
}
