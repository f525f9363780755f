//! Conformally round metrics on the 2-sphere as cross sections of the past
//! lightcone in 3+1 Minkowski space, and their 2d Ricci flow realized as
//! null mean curvature flow.
//!
//! The crate is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the bottom of this file fix `f64`, which
//! is what every tolerance in the test suites assumes.

pub mod conformal;
pub mod error;
pub mod flow;
pub mod lightcone;
pub mod scalar;
pub mod spectral;
pub mod steady;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = spectral::SphereGrid<f64>;
pub type Field = spectral::ScalarField<f64>;
pub type Coeffs = spectral::HarmonicCoeffs<f64>;
pub type OneForm = spectral::VectorFieldSph<f64>;
pub type SymTensor = tensor::SymTensorField<f64>;
pub type Tensor3 = tensor::Tensor3Field<f64>;
pub type Omega = lightcone::ConformalFactor<f64>;
pub type Quantities = lightcone::LightconeQuantities<f64>;
pub type SteadyParams = steady::SteadyStateParams<f64>;
pub type Boost = steady::BoostSpec<f64>;
pub type State = flow::FlowState<f64>;
pub type Options = flow::FlowOptions<f64>;
pub type Record = flow::DiagnosticsRecord<f64>;
pub type Trajectory = flow::TrajectoryLog<f64>;
