//! Calibration sweep for the gap-law coefficients.
use envave::measures::{Domain, Kernel, Measure, ball_thickness, EvalSet};
use envave::models::{Model, partition::Partition};
use envave::spectral::{spectral_gap, GapFlavor, half_height_radius, random_grid_density};

fn ratio(model: &Model, rho: &Measure, radius: f64, p: f64) -> f64 {
    let th = ball_thickness(rho, radius, &EvalSet::Domain).unwrap();
    let eps = spectral_gap(model, rho, GapFlavor::NumericalRange).unwrap();
    eps / th.powf(p)
}

fn main() {
    let cells = 128;
    let length = 1.0;
    let domain = Domain::torus(length);
    let uniform = Measure::uniform_grid(domain, cells).unwrap();

    // reference kernels
    let phi_mphi = Kernel::smooth_mollifier(0.4).unwrap();
    let phi_cs = Kernel::bochner_smooth(0.2).unwrap();

    let mphi = Model::overmollified_with_quadrature(phi_mphi.clone(), 256);
    let cs = Model::cucker_smale(phi_cs.clone());
    let seg = Model::segregation(Partition::uniform(length, 3));

    let r_mphi = half_height_radius(&phi_mphi);
    let r_cs = half_height_radius(&phi_cs);
    let seg_part = Partition::uniform(length, 3);
    let r_seg = seg_part.overlap_radius();
    println!("radii: mphi {r_mphi:.4} cs {r_cs:.4} seg {r_seg:.4}");

    println!("uniform ratios:");
    println!("  mphi (p=1): {:.4}", ratio(&mphi, &uniform, r_mphi, 1.0));
    println!("  cs   (p=3): {:.4}", ratio(&cs, &uniform, r_cs, 3.0));
    println!("  seg  (p=6): {:.4}", ratio(&seg, &uniform, r_seg, 6.0));

    let mut min_mphi = f64::INFINITY;
    let mut min_cs = f64::INFINITY;
    let mut min_seg = f64::INFINITY;
    for seed in 0..120u64 {
        let d = random_grid_density(cells, length, seed);
        let rho = Measure::grid_from_density(domain, &d).unwrap();
        min_mphi = min_mphi.min(ratio(&mphi, &rho, r_mphi, 1.0));
        min_cs = min_cs.min(ratio(&cs, &rho, r_cs, 3.0));
        min_seg = min_seg.min(ratio(&seg, &rho, r_seg, 6.0));
    }
    println!("min over 120 random densities:");
    println!("  mphi {min_mphi:.4}  cs {min_cs:.4}  seg {min_seg:.4}");

    // MT lambda coefficient on near-uniform densities
    let phi_mt = Kernel::smooth_mollifier(0.4).unwrap();
    let mut min_mt = f64::INFINITY;
    for seed in 0..60u64 {
        let base = random_grid_density(cells, length, seed);
        // squash to +-5% variation
        let d: Vec<f64> = base.iter().map(|v| 1.0 + 0.05 * (v - 1.0) / v.abs().max(0.3)).collect();
        let rho = Measure::grid_from_density(domain, &d).unwrap();
        let dens = rho.density().unwrap();
        let rp = dens.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let rm = dens.iter().cloned().fold(f64::INFINITY, f64::min);
        let lam = spectral_gap(&Model::motsch_tadmor(phi_mt.clone()), &rho, GapFlavor::VariationalLambda).unwrap();
        min_mt = min_mt.min(lam * rp / (rm * rm));
    }
    println!("MT lambda ratio min over near-uniform: {min_mt:.4}");

    // beta near-uniform gap
    let mut min_mb = f64::INFINITY;
    for seed in 0..60u64 {
        let base = random_grid_density(cells, length, seed);
        let d: Vec<f64> = base.iter().map(|v| 1.0 + 0.04 * (v - 1.0)).collect();
        let rho = Measure::grid_from_density(domain, &d).unwrap();
        for beta in [0.0, 0.5, 1.0] {
            let m = Model::beta(phi_cs.clone(), beta);
            let eps = spectral_gap(&m, &rho, GapFlavor::NumericalRange).unwrap();
            min_mb = min_mb.min(eps);
        }
    }
    println!("beta near-uniform min eps: {min_mb:.4}");
}
