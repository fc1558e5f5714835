//! Algebraic identities of the averaging algebra, verified by independent
//! quadrature routes.

use envave::measures::{Domain, Kernel, Measure};
use envave::models::Model;
use envave::spectral::energies;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The over-mollified alignment functional `A1 = E1 - E2` equals the
/// variable-doubling quadrature
/// `1/2 iint rho_phiphi(x,y) |u_F(x) - u_F(y)|^2 dx dy`.
#[test]
fn overmollified_alignment_identity() {
    let cells = 256;
    let length = 1.0;
    let domain = Domain::torus(length);
    let dx = length / cells as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let density: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>() + 0.1).collect();
    let rho = Measure::grid_from_density(domain, &density).unwrap();
    let u: Vec<f64> = (0..cells)
        .map(|i| {
            let x = (i as f64 + 0.5) * dx;
            (std::f64::consts::TAU * x).sin() + 0.4 * (2.0 * std::f64::consts::TAU * x).cos()
        })
        .collect();

    let phi = Kernel::gaussian(0.06, 1).unwrap();
    let model = Model::overmollified_with_quadrature(phi.clone(), cells);
    let (_, e1, e2) = energies(&model, &rho, &u).unwrap();
    let a1 = e1 - e2;

    // independent route: Favre field and the doubled convolution kernel
    let pts = rho.support_points();
    let m = rho.masses();
    let rho_phi: Vec<f64> = pts.iter().map(|&x| rho.convolve(&phi, x)).collect();
    let favre: Vec<f64> = pts
        .iter()
        .enumerate()
        .map(|(i, &x)| rho.convolve_weighted(&u, &phi, x) / rho_phi[i])
        .collect();
    // rho_phiphi(x_i, x_j) = sum_k m_k phi(x_i - x_k) phi(x_j - x_k)
    let conv: Vec<Vec<f64>> = pts
        .iter()
        .map(|&x| {
            pts.iter()
                .map(|&y| phi.eval(domain.distance(x, y)))
                .collect()
        })
        .collect();
    let mut quad = 0.0;
    for i in 0..cells {
        for j in 0..cells {
            let mut rpp = 0.0;
            for k in 0..cells {
                rpp += m[k] * conv[i][k] * conv[j][k];
            }
            let diff = favre[i] - favre[j];
            quad += rpp * diff * diff;
        }
    }
    quad *= 0.5 * dx * dx;

    assert!(
        (a1 - quad).abs() < 1e-8,
        "energy route {a1} vs quadrature route {quad}"
    );
}

/// The Cucker-Smale average with a self-convolved kernel equals the nested
/// application of two Favre filtrations.
#[test]
fn nested_favre_composition() {
    let length = 1.0;
    let domain = Domain::torus(length);
    let h = 0.05;
    let psi = Kernel::gaussian(h, 1).unwrap();
    let phi = Kernel::bochner_gaussian(h).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 15;
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), 0.0]).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.2).collect();
    let rho = Measure::atomic_normalized(domain, pts.clone(), w).unwrap();
    let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();

    let direct = Model::cucker_smale(phi).average(&rho, &u).unwrap();

    // two-stage route: inner Favre at quadrature nodes, outer Favre back
    let q = 4096;
    let dz = length / q as f64;
    let nodes: Vec<f64> = (0..q).map(|i| (i as f64 + 0.5) * dz).collect();
    let inner_num: Vec<f64> = nodes
        .iter()
        .map(|&z| rho.convolve_weighted(&u, &psi, [z, 0.0]))
        .collect();
    let inner_den: Vec<f64> = nodes
        .iter()
        .map(|&z| rho.convolve(&psi, [z, 0.0]))
        .collect();
    let two_stage: Vec<f64> = rho
        .support_points()
        .iter()
        .map(|&x| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (k, &z) in nodes.iter().enumerate() {
                let wgt = psi.eval(domain.distance(x, [z, 0.0])) * dz;
                // v * varrho = inner_num; varrho = inner_den
                num += wgt * inner_num[k];
                den += wgt * inner_den[k];
            }
            num / den
        })
        .collect();

    for i in 0..n {
        assert!(
            (direct[i] - two_stage[i]).abs() < 1e-9,
            "atom {i}: direct {} vs nested {}",
            direct[i],
            two_stage[i]
        );
    }
}
