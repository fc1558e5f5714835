//! Randomized structural probes: conservativity, ball-positivity, Jensen,
//! and the kernel comparison inequality.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{Model, ModelError};
use crate::measures::{Field, Kernel, Measure};

/// Default number of probe fields for randomized checks.
pub const DEFAULT_PROBES: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub holds: bool,
    /// Worst-case residual (conservativity) or margin (ball-positivity).
    pub value: f64,
    pub probes: usize,
}

fn gaussian_field(rng: &mut ChaCha8Rng, n: usize) -> Field {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `kappa`-weighted inner product `(u, v)_kappa = sum m_i s_i u_i v_i`.
fn kappa_dot(m: &[f64], s: &[f64], u: &[f64], v: &[f64]) -> f64 {
    m.iter()
        .zip(s)
        .zip(u.iter().zip(v))
        .map(|((m, s), (u, v))| m * s * u * v)
        .sum()
}

/// Max residual `|int <u> dkappa - int u dkappa|` over random unit fields.
pub fn check_conservative(
    model: &Model,
    rho: &Measure,
    tol: f64,
    probes: usize,
    seed: u64,
) -> Result<CheckReport, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rho.support_len();
    let m = rho.masses();
    let s = model.strength(rho)?;
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let mut u = gaussian_field(&mut rng, n);
        let norm = kappa_dot(m, &s, &u, &u).sqrt();
        if norm < 1e-300 {
            continue;
        }
        for x in u.iter_mut() {
            *x /= norm;
        }
        let au = model.average(rho, &u)?;
        let lhs = kappa_dot(m, &s, &au, &vec![1.0; n]);
        let rhs = kappa_dot(m, &s, &u, &vec![1.0; n]);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(CheckReport {
        holds: worst < tol,
        value: worst,
        probes,
    })
}

/// Worst margin of `(u, <u>)_kappa - ||<u>||^2_kappa` over random probes plus
/// the exact eigen-margin of the finite reduction.
pub fn check_ball_positive(
    model: &Model,
    rho: &Measure,
    tol: f64,
    probes: usize,
    seed: u64,
) -> Result<CheckReport, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rho.support_len();
    let m = rho.masses();
    let s = model.strength(rho)?;
    let mut worst = f64::INFINITY;
    for _ in 0..probes {
        let mut u = gaussian_field(&mut rng, n);
        let norm = kappa_dot(m, &s, &u, &u).sqrt();
        if norm < 1e-300 {
            continue;
        }
        for x in u.iter_mut() {
            *x /= norm;
        }
        let au = model.average(rho, &u)?;
        let margin = kappa_dot(m, &s, &u, &au) - kappa_dot(m, &s, &au, &au);
        worst = worst.min(margin);
    }
    // exact margin through the eigen-analysis of the finite reduction
    if rho.is_atomic() {
        let km = model.kernel_matrix(rho)?;
        let fm = km.to_finite_model()?;
        let bp = fm.ball_positivity();
        worst = worst.min(bp.margin);
    }
    Ok(CheckReport {
        holds: worst >= -tol,
        value: worst,
        probes,
    })
}

/// Library of convex, even, increasing test functions for Jensen probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexPsi {
    Abs,
    Square,
    CoshMinusOne,
}

impl ConvexPsi {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ConvexPsi::Abs => x.abs(),
            ConvexPsi::Square => x * x,
            ConvexPsi::CoshMinusOne => x.cosh() - 1.0,
        }
    }
}

/// Pointwise Jensen inequality `psi(<u>) <= <psi(u)> + tol` on the carrier.
pub fn check_jensen(
    model: &Model,
    rho: &Measure,
    u: &Field,
    psi: ConvexPsi,
    tol: f64,
) -> Result<(bool, f64), ModelError> {
    let au = model.average(rho, u)?;
    let psi_u: Field = u.iter().map(|&x| psi.eval(x)).collect();
    let a_psi_u = model.average(rho, &psi_u)?;
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in au.iter().zip(&a_psi_u) {
        worst = worst.max(psi.eval(*a) - b);
    }
    Ok((worst <= tol, worst))
}

/// Measured constant of the kernel comparison inequality
/// `(rho / rho_phi^(1-beta))_phi <= C rho_phi^beta` on a grid density.
pub fn check_kmt_inequality(phi: &Kernel, beta: f64, rho: &Measure) -> Result<f64, ModelError> {
    assert!((0.0..=1.0).contains(&beta));
    let pts = rho.support_points();
    let masses = rho.masses();
    let rho_phi: Vec<f64> = pts.iter().map(|&x| rho.convolve(phi, x)).collect();
    // integrand weights rho(y)/rho_phi(y)^(1-beta) carried by the same atoms
    let mut worst = 0.0f64;
    for (i, &x) in pts.iter().enumerate() {
        let mut inner = 0.0;
        for (j, &y) in pts.iter().enumerate() {
            if masses[j] == 0.0 {
                continue;
            }
            if rho_phi[j] <= 0.0 {
                return Err(ModelError::VacuumEvaluation);
            }
            inner += masses[j] / rho_phi[j].powf(1.0 - beta)
                * phi.eval(rho.domain.distance(x, y));
        }
        let denom = rho_phi[i].powf(beta);
        if denom > 0.0 {
            worst = worst.max(inner / denom);
        }
    }
    Ok(worst)
}

/// Random search for a ball-positivity counterexample over atomic measures.
///
/// The sampler alternates uniform clouds with clustered clouds carrying one
/// dominant atom; the latter is where density-dependent kernels lose
/// positive-definiteness. Returns the first failing instance as
/// (measure, JSON record), if any.
pub fn search_ball_positive_counterexample(
    model: &Model,
    n_atoms: usize,
    trials: usize,
    seed: u64,
) -> Result<Option<(Measure, String)>, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let (pts, w): (Vec<[f64; 2]>, Vec<f64>) = if trial % 2 == 0 {
            let pts = (0..n_atoms).map(|_| [rng.gen::<f64>(), 0.0]).collect();
            let w = (0..n_atoms).map(|_| rng.gen::<f64>() + 0.02).collect();
            (pts, w)
        } else {
            let center = rng.gen::<f64>();
            let spread = 0.03 + rng.gen::<f64>() * 0.05;
            let pts = (0..n_atoms)
                .map(|_| [center + rng.gen::<f64>() * spread, 0.0])
                .collect();
            let mut w: Vec<f64> = (0..n_atoms).map(|_| rng.gen::<f64>() * 0.05 + 0.01).collect();
            w[rng.gen_range(0..n_atoms)] = 1.0;
            (pts, w)
        };
        let rho = Measure::atomic_normalized(crate::measures::Domain::torus(1.0), pts, w)?;
        let report = check_ball_positive(model, &rho, 1e-10, 50, seed ^ trial as u64)?;
        if !report.holds {
            let record = serde_json::json!({
                "model": model.name(),
                "trial": trial,
                "margin": report.value,
                "measure": &rho,
            })
            .to_string();
            return Ok(Some((rho, record)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Domain;
    use crate::models::partition::Partition;
    use rand::Rng;

    fn random_atomic(n: usize, seed: u64) -> Measure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), 0.0]).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.1).collect();
        Measure::atomic_normalized(Domain::torus(1.0), pts, w).unwrap()
    }

    #[test]
    fn cs_is_conservative_mt_is_not() {
        let rho = random_atomic(10, 21);
        let phi = Kernel::gaussian(0.15, 1).unwrap();
        let cs = check_conservative(&Model::cucker_smale(phi.clone()), &rho, 1e-10, 100, 5)
            .unwrap();
        assert!(cs.holds, "CS residual {}", cs.value);
        // generic 3-atom instance with distinct gaps
        let rho3 = Measure::atomic_normalized(
            Domain::torus(1.0),
            vec![[0.0, 0.0], [0.13, 0.0], [0.41, 0.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let mt = check_conservative(&Model::motsch_tadmor(phi), &rho3, 1e-10, 100, 5).unwrap();
        assert!(!mt.holds, "MT residual {}", mt.value);
    }

    #[test]
    fn global_is_conservative() {
        let rho = random_atomic(6, 22);
        let r = check_conservative(&Model::global(), &rho, 1e-10, 50, 1).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn overmollified_is_ball_positive() {
        let rho = random_atomic(7, 23);
        let m = Model::overmollified(Kernel::gaussian(0.15, 1).unwrap());
        let r = check_ball_positive(&m, &rho, 1e-9, 100, 2).unwrap();
        assert!(r.holds, "margin {}", r.value);
    }

    #[test]
    fn cs_bochner_is_ball_positive() {
        let rho = random_atomic(7, 24);
        let m = Model::cucker_smale(Kernel::bochner_gaussian(0.1).unwrap());
        let r = check_ball_positive(&m, &rho, 1e-9, 100, 3).unwrap();
        assert!(r.holds, "margin {}", r.value);
    }

    #[test]
    fn segregation_is_ball_positive() {
        let rho = random_atomic(9, 25);
        let m = Model::segregation(Partition::uniform(1.0, 3));
        let r = check_ball_positive(&m, &rho, 1e-9, 100, 4).unwrap();
        assert!(r.holds, "margin {}", r.value);
    }

    #[test]
    fn topological_counterexample_exists() {
        // the metric-topological kernel is not Bochner-positive; random
        // search over small clouds finds a failing instance
        let m = Model::topological(Kernel::smooth_cutoff(2.0).unwrap(), 2.0, 1e-2);
        let found = search_ball_positive_counterexample(&m, 5, 200, 7).unwrap();
        assert!(found.is_some(), "expected a ball-positivity counterexample");
    }

    #[test]
    fn jensen_holds_across_zoo() {
        let rho = random_atomic(8, 26);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let u: Vec<f64> = (0..8).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let phi = Kernel::gaussian(0.15, 1).unwrap();
        for m in [
            Model::global(),
            Model::cucker_smale(phi.clone()),
            Model::motsch_tadmor(phi.clone()),
            Model::overmollified(phi),
            Model::segregation(Partition::uniform(1.0, 3)),
        ] {
            for psi in [ConvexPsi::Abs, ConvexPsi::Square, ConvexPsi::CoshMinusOne] {
                let (ok, worst) = check_jensen(&m, &rho, &u, psi, 1e-10).unwrap();
                assert!(ok, "model {} psi {:?} margin {}", m.name(), psi, worst);
            }
        }
    }

    #[test]
    fn jensen_equality_for_constant_abs() {
        let rho = random_atomic(5, 27);
        let u = vec![1.5; 5];
        let (ok, worst) =
            check_jensen(&Model::global(), &rho, &u, ConvexPsi::Abs, 1e-12).unwrap();
        assert!(ok);
        assert!(worst.abs() < 1e-12, "equality expected, got {worst}");
    }

    #[test]
    fn jensen_square_strict_for_nonconstant_global() {
        let rho = Measure::atomic(
            Domain::torus(1.0),
            vec![[0.1, 0.0], [0.6, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let u = vec![1.0, -1.0];
        let (ok, worst) =
            check_jensen(&Model::global(), &rho, &u, ConvexPsi::Square, 1e-12).unwrap();
        assert!(ok);
        // <u> = 0, <u^2> = 1: strict inequality with margin -1
        assert!(worst < -0.9);
    }

    #[test]
    fn kmt_beta_one_is_exactly_one() {
        let domain = Domain::torus(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let density: Vec<f64> = (0..256).map(|_| rng.gen::<f64>() + 0.05).collect();
        let rho = Measure::grid_from_density(domain, &density).unwrap();
        let phi = Kernel::smooth_cutoff(0.2).unwrap();
        let c = check_kmt_inequality(&phi, 1.0, &rho).unwrap();
        assert!((c - 1.0).abs() < 1e-12, "beta=1 constant {c}");
    }

    #[test]
    fn kmt_beta_zero_uniform_is_one() {
        let domain = Domain::torus(1.0);
        let rho = Measure::uniform_grid(domain, 256).unwrap();
        let phi = Kernel::smooth_cutoff(0.2).unwrap();
        let c = check_kmt_inequality(&phi, 0.0, &rho).unwrap();
        assert!((c - 1.0).abs() < 1e-10, "uniform beta=0 constant {c}");
    }
}
