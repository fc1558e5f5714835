//! The two-stage mollified velocity `u_delta = ((u rho)_psi / rho_psi)_psi`.
//!
//! The mollifier `psi_delta` is a Gaussian of width `delta`, positive on the
//! whole environment, so the Favre quotient never sees a vacuum. The outer
//! convolution uses quadrature weights renormalized to unit sum, which makes
//! the discrete operation an exact averaging: constants are preserved and
//! `max |u_delta| <= max |u|` holds to rounding.

use thiserror::Error;

use super::domain::Axis;
use super::kernel::Kernel;
use super::measure::{Field, Measure, MeasureError};

#[derive(Debug, Error, PartialEq)]
pub enum MollifyError {
    #[error("mollification width must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("only 1D measures carry a mollified velocity")]
    NotOneDimensional,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Quadrature nodes covering the measure's environment at resolution `~delta/12`.
fn quadrature_nodes(rho: &Measure, delta: f64) -> Vec<f64> {
    match rho.domain.axis(0) {
        Axis::Torus { length } => {
            let n = ((length / delta * 12.0).ceil() as usize).clamp(512, 1 << 16);
            let dx = length / n as f64;
            (0..n).map(|i| (i as f64 + 0.5) * dx).collect()
        }
        Axis::Line => {
            let xs: Vec<f64> = rho.support_points().iter().map(|p| p[0]).collect();
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min) - 8.0 * delta;
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 8.0 * delta;
            let n = (((hi - lo) / delta * 12.0).ceil() as usize).clamp(512, 1 << 16);
            let dx = (hi - lo) / n as f64;
            (0..n).map(|i| lo + (i as f64 + 0.5) * dx).collect()
        }
    }
}

/// `u_delta` evaluated on the carrier of `rho`.
pub fn mollified_velocity(u: &Field, rho: &Measure, delta: f64) -> Result<Field, MollifyError> {
    if delta <= 0.0 {
        return Err(MollifyError::NonPositiveDelta(delta));
    }
    if rho.domain.dim() != 1 {
        return Err(MollifyError::NotOneDimensional);
    }
    rho.check_field(u)?;
    let psi = Kernel::gaussian(delta, 1).expect("delta > 0");
    let nodes = quadrature_nodes(rho, delta);

    // stage 1: Favre quotient at the quadrature nodes
    let favre: Vec<f64> = nodes
        .iter()
        .map(|&z| {
            let den = rho.convolve(&psi, [z, 0.0]);
            let num = rho.convolve_weighted(u, &psi, [z, 0.0]);
            num / den
        })
        .collect();

    // stage 2: renormalized outer mollification back onto the carrier
    let out = rho
        .support_points()
        .iter()
        .map(|&x| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (z, f) in nodes.iter().zip(&favre) {
                let w = psi.eval(rho.domain.distance(x, [*z, 0.0]));
                num += w * f;
                den += w;
            }
            num / den
        })
        .collect();
    Ok(out)
}
