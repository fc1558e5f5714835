//! Numerical laboratory for environmental-averaging alignment models.
//!
//! The crate provides a pluggable model algebra (strength, averaging
//! operator, reproducing kernel), particle/kinetic/hydrodynamic simulators
//! built on it, and verifiers for structural properties (conservativity,
//! symmetry, ball-positivity, spectral gaps) and dynamical behavior
//! (flocking, relaxation, mean-field and hydrodynamic limits) at desk scale.

pub mod finite;
pub mod models;
pub mod spectral;
pub mod measures;

pub use measures::{Domain, Field, Kernel, Measure};
