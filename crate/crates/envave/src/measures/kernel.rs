//! Radial communication kernels.
//!
//! All kernels are non-negative radial profiles evaluated on minimal-image
//! distances. The smooth cutoff `chi_r` (equal to 1 on `B_{r/2}`, vanishing
//! outside `B_r`) is the library's fixed C-infinity bump; its exact shape is
//! the `transition` function below, published here as a constant of the
//! artifact since thickness values depend on it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel parameter {0} must be positive")]
    NonPositiveParameter(&'static str),
    #[error("kernel flagged as mollifier but its integral is {0}, not 1")]
    NotAMollifier(f64),
}

/// C-infinity monotone step: 0 for `t <= 0`, 1 for `t >= 1`.
fn transition(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// The fixed smooth cutoff profile: 1 on `[0, 1/2]`, 0 beyond 1.
pub fn smooth_cutoff_profile(xi: f64) -> f64 {
    transition(2.0 * (1.0 - xi.abs()))
}

/// 1D integral of `smooth_cutoff_profile` over the whole line.
///
/// By the symmetry `transition(t) + transition(1-t) = 1` the transition
/// region integrates to exactly 1/4 on each side, so the total is 3/2.
pub const SMOOTH_CUTOFF_INTEGRAL_1D: f64 = 1.5;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum KernelProfile {
    /// `lambda (1 + r^2)^(-beta/2)`, the classical power-law kernel.
    CsPower { lambda: f64, beta: f64 },
    /// Hard indicator of `[0, r0)`.
    Bump { r0: f64 },
    /// The smooth cutoff `chi_r`: 1 on `[0, r/2]`, 0 beyond `r`.
    SmoothCutoff { r: f64 },
    /// `chi_{r}` rescaled to unit 1D integral.
    SmoothMollifier { r: f64 },
    /// Normalized Gaussian in dimension `dim`.
    Gaussian { h: f64, dim: usize },
    /// `psi * psi` for `psi` a normalized Gaussian of width `h` (1D closed form).
    BochnerGaussian { h: f64 },
    /// `psi * psi` for `psi` the normalized top-hat of half-width `a` (1D tent).
    BochnerTent { a: f64 },
    /// Sampled radial profile with linear interpolation, zero beyond support.
    Tabulated { dr: f64, values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Kernel {
    pub profile: KernelProfile,
    pub mollifier: bool,
}

impl Kernel {
    pub fn cs_power(lambda: f64, beta: f64) -> Result<Self, KernelError> {
        if lambda <= 0.0 {
            return Err(KernelError::NonPositiveParameter("lambda"));
        }
        Ok(Kernel {
            profile: KernelProfile::CsPower { lambda, beta },
            mollifier: false,
        })
    }

    pub fn bump(r0: f64) -> Result<Self, KernelError> {
        if r0 <= 0.0 {
            return Err(KernelError::NonPositiveParameter("r0"));
        }
        Ok(Kernel {
            profile: KernelProfile::Bump { r0 },
            mollifier: false,
        })
    }

    pub fn smooth_cutoff(r: f64) -> Result<Self, KernelError> {
        if r <= 0.0 {
            return Err(KernelError::NonPositiveParameter("r"));
        }
        Ok(Kernel {
            profile: KernelProfile::SmoothCutoff { r },
            mollifier: false,
        })
    }

    pub fn smooth_mollifier(r: f64) -> Result<Self, KernelError> {
        if r <= 0.0 {
            return Err(KernelError::NonPositiveParameter("r"));
        }
        Ok(Kernel {
            profile: KernelProfile::SmoothMollifier { r },
            mollifier: true,
        })
    }

    pub fn gaussian(h: f64, dim: usize) -> Result<Self, KernelError> {
        if h <= 0.0 {
            return Err(KernelError::NonPositiveParameter("h"));
        }
        Ok(Kernel {
            profile: KernelProfile::Gaussian { h, dim },
            mollifier: true,
        })
    }

    pub fn bochner_gaussian(h: f64) -> Result<Self, KernelError> {
        if h <= 0.0 {
            return Err(KernelError::NonPositiveParameter("h"));
        }
        Ok(Kernel {
            profile: KernelProfile::BochnerGaussian { h },
            mollifier: true,
        })
    }

    pub fn bochner_tent(a: f64) -> Result<Self, KernelError> {
        if a <= 0.0 {
            return Err(KernelError::NonPositiveParameter("a"));
        }
        Ok(Kernel {
            profile: KernelProfile::BochnerTent { a },
            mollifier: true,
        })
    }

    /// `psi * psi` for `psi` the normalized smooth cutoff of radius `r0`,
    /// tabulated on 4096 samples of `[0, 2 r0]`.
    pub fn bochner_smooth(r0: f64) -> Result<Self, KernelError> {
        if r0 <= 0.0 {
            return Err(KernelError::NonPositiveParameter("r0"));
        }
        let n = 4096;
        let dr = 2.0 * r0 / n as f64;
        // psi(x) = chi_{r0}(x) / (1.5 r0); quadrature of the self-convolution
        let psi = |x: f64| smooth_cutoff_profile(x / r0) / (SMOOTH_CUTOFF_INTEGRAL_1D * r0);
        let q = 2048;
        let dz = 2.0 * r0 / q as f64;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let r = i as f64 * dr;
                let mut acc = 0.0;
                for j in 0..q {
                    let z = -r0 + (j as f64 + 0.5) * dz;
                    acc += psi(z) * psi(r - z);
                }
                acc * dz
            })
            .collect();
        Ok(Kernel {
            profile: KernelProfile::Tabulated { dr, values },
            mollifier: true,
        })
    }

    /// Evaluate at radius `r >= 0`.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match &self.profile {
            KernelProfile::CsPower { lambda, beta } => lambda * (1.0 + r * r).powf(-beta / 2.0),
            KernelProfile::Bump { r0 } => {
                if r < *r0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelProfile::SmoothCutoff { r: rad } => smooth_cutoff_profile(r / rad),
            KernelProfile::SmoothMollifier { r: rad } => {
                smooth_cutoff_profile(r / rad) / (SMOOTH_CUTOFF_INTEGRAL_1D * rad)
            }
            KernelProfile::Gaussian { h, dim } => {
                let norm = (2.0 * std::f64::consts::PI * h * h).powf(-(*dim as f64) / 2.0);
                norm * (-r * r / (2.0 * h * h)).exp()
            }
            KernelProfile::BochnerGaussian { h } => {
                let s2 = 2.0 * h * h;
                (2.0 * std::f64::consts::PI * s2).powf(-0.5) * (-r * r / (2.0 * s2)).exp()
            }
            KernelProfile::BochnerTent { a } => {
                if r < 2.0 * a {
                    (2.0 * a - r) / (4.0 * a * a)
                } else {
                    0.0
                }
            }
            KernelProfile::Tabulated { dr, values } => {
                let s = r / dr;
                let i = s.floor() as usize;
                if i + 1 >= values.len() {
                    0.0
                } else {
                    let t = s - i as f64;
                    values[i] * (1.0 - t) + values[i + 1] * t
                }
            }
        }
    }

    /// Radius beyond which the kernel vanishes, `None` for global support.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.profile {
            KernelProfile::CsPower { .. }
            | KernelProfile::Gaussian { .. }
            | KernelProfile::BochnerGaussian { .. } => None,
            KernelProfile::Bump { r0 } => Some(*r0),
            KernelProfile::SmoothCutoff { r } | KernelProfile::SmoothMollifier { r } => Some(*r),
            KernelProfile::BochnerTent { a } => Some(2.0 * a),
            KernelProfile::Tabulated { dr, values } => Some(dr * values.len() as f64),
        }
    }

    /// 1D integral over the whole line, by profile formula or quadrature.
    pub fn integral_1d(&self) -> f64 {
        match &self.profile {
            KernelProfile::Gaussian { dim: 1, .. }
            | KernelProfile::BochnerGaussian { .. }
            | KernelProfile::BochnerTent { .. } => 1.0,
            KernelProfile::Bump { r0 } => 2.0 * r0,
            KernelProfile::SmoothCutoff { r } => SMOOTH_CUTOFF_INTEGRAL_1D * r,
            KernelProfile::SmoothMollifier { .. } => 1.0,
            _ => {
                let half = self.support_radius().unwrap_or(50.0);
                let n = 200_000;
                let dr = half / n as f64;
                let mut acc = 0.0;
                for i in 0..n {
                    acc += self.eval((i as f64 + 0.5) * dr);
                }
                2.0 * acc * dr
            }
        }
    }

    /// Check the mollifier invariant at tolerance 1e-10.
    pub fn validate(&self) -> Result<(), KernelError> {
        if self.mollifier {
            let integral = match &self.profile {
                KernelProfile::Gaussian { .. } => 1.0,
                _ => self.integral_1d(),
            };
            if (integral - 1.0).abs() > 1e-10 {
                return Err(KernelError::NotAMollifier(integral));
            }
        }
        Ok(())
    }
}
