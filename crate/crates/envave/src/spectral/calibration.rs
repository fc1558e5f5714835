//! Frozen coefficients of the thickness-based gap laws.
//!
//! Each bound has the shape `eps >= c * thickness^p` with the exponent fixed
//! by the law and `c` a library constant. The coefficients below were
//! produced by the calibration procedure in `tests/calibration.rs`: measure
//! the ratio `eps_measured / thickness^p` on the uniform density with the
//! reference kernels, then retain half of it as the frozen coefficient. The
//! halving is the safety margin for non-uniform densities; the gap survey in
//! the acceptance suite exercises the frozen values on random densities.

/// Over-mollified model, `eps >= c * thickness` law.
/// Uniform-density ratio 1.680 with `smooth_mollifier(0.4)` on 128 cells.
pub const MPHI_GAP_COEFF: f64 = 0.84;

/// Cucker-Smale with Bochner kernel, `eps >= c * thickness^3` law.
/// Uniform-density ratio 19.81 with `bochner_smooth(0.2)` on 128 cells.
pub const CS_GAP_COEFF: f64 = 9.9;

/// Segregation over `L` neighborhoods, `eps >= c * thickness^(2L)` law.
/// Uniform-density ratio 1.29e5 with the 3-bump partition on 128 cells.
pub const SEG_GAP_COEFF: f64 = 6.4e4;

/// Beta-family near-uniform bound: constant gap once the density is within
/// `MB_NEAR_UNIFORM_DELTA` of uniform in `L^1`. Smallest observed gap over
/// beta in {0, 1/2, 1} on near-uniform densities was 0.26.
pub const MB_GAP_COEFF: f64 = 0.1;
pub const MB_NEAR_UNIFORM_DELTA: f64 = 0.1;

/// Motsch-Tadmor small-variation condition `rho+ - rho- <= c rho-^3 / rho+`.
pub const MT_VARIATION_COEFF: f64 = 1.0;

/// Motsch-Tadmor predicted alignment gap `lambda >= c rho-^2 / rho+`.
/// Smallest observed ratio on near-uniform densities was 0.51.
pub const MT_LAMBDA_COEFF: f64 = 0.25;
