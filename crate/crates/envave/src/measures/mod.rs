//! Measures, kernels, convolution, thickness, mollification, and exact
//! Wasserstein distances: the substrate the model zoo is built on.

pub mod domain;
pub mod kernel;
pub mod measure;
pub mod mollify;
mod network_simplex;
pub mod wasserstein;

pub use domain::{Axis, Domain, Point};
pub use kernel::{Kernel, KernelError, KernelProfile};
pub use measure::{ball_thickness, EvalSet, Field, Measure, MeasureError, Representation};
pub use mollify::{mollified_velocity, MollifyError};
pub use wasserstein::{wasserstein1, wasserstein2, WassersteinError, MAX_EXACT_OT_ATOMS};
