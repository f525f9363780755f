//! Quadrature grid on S², real spherical-harmonic transforms, and the
//! differential operators of the round metric.

mod field;
mod grid;
pub mod legendre;
mod ops;
mod transform;

pub use field::{HarmonicCoeffs, ScalarField, VectorFieldSph};
pub(crate) use field::same_grid;
pub use grid::{default_oversample, SphereGrid};
pub use ops::{gradient0, gradient_and_laplacian0, hessian0, integrate, laplacian0, RoundDerivatives};
pub use transform::{analyze, eval_at, eval_with_gradient_at, synthesize, synthesize_derivative};

use std::sync::Arc;

use num_rational::Ratio;

use crate::error::Result;
use crate::scalar::Real;

/// Convenience wrapper for [`SphereGrid::new`].
pub fn build_grid<T: Real>(bandlimit: usize, oversample: Ratio<u32>) -> Result<Arc<SphereGrid<T>>> {
    SphereGrid::new(bandlimit, oversample)
}

/// Samples the real harmonic `Y_{l,m}` on a grid.
pub fn harmonic<T: Real>(grid: &Arc<SphereGrid<T>>, l: usize, m: i64) -> ScalarField<T> {
    let c = HarmonicCoeffs::single(l, l, m, T::one());
    synthesize(&c, grid).expect("l within grid bandlimit")
}
