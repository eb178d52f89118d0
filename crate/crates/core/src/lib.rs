//! Elastic spinless partial-wave analysis at fixed energy.
//!
//! The crate covers the forward problem (phase shifts to differential cross
//! section), the inverse problem (every unitary amplitude reproducing a given
//! cross section, found by descending through the Legendre coefficients), the
//! nonlinear integral equation for the phase of the amplitude, and the unitary
//! tail constructions that turn a finite partial-wave sum into an entire
//! function of controlled order.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the CLI uses.

pub mod amplitude;
pub mod enumerator;
pub mod error;
pub mod legendre;
pub mod phase_solver;
pub mod real;
pub mod regularize;

pub use error::{Error, Result};
pub use num_complex::Complex;
pub use real::Real;

pub type QuadratureRule64 = legendre::QuadratureRule<f64>;
pub type PhaseShifts64 = amplitude::PhaseShifts<f64>;
pub type PartialWaves64 = amplitude::PartialWaves<f64>;
pub type CrossSectionCoefficients64 = amplitude::CrossSectionCoefficients<f64>;
pub type AngularFunction64 = amplitude::AngularFunction<f64>;
pub type DescentConfig64 = enumerator::DescentConfig<f64>;
pub type SolutionSet64 = enumerator::SolutionSet<f64>;
pub type PhaseFunction64 = phase_solver::PhaseFunction<f64>;
pub type TailCoefficients64 = regularize::TailCoefficients<f64>;
pub type OrderEstimate64 = regularize::OrderEstimate<f64>;
