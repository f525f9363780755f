//! Differential operators and quadrature of the round metric `dΩ²`.

use std::sync::Arc;

use super::field::{ScalarField, VectorFieldSph};
use super::transform::{analyze, synthesize_derivative};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::{MetricTag, SymTensorField};

/// All coordinate partial derivatives up to second order of a field,
/// obtained from a single analysis.
#[derive(Debug, Clone)]
pub struct RoundDerivatives<T> {
    pub d_theta: ScalarField<T>,
    pub d_phi: ScalarField<T>,
    pub d_theta_theta: ScalarField<T>,
    pub d_theta_phi: ScalarField<T>,
    pub d_phi_phi: ScalarField<T>,
    pub laplacian: ScalarField<T>,
}

fn check_finite<T: Real>(f: &ScalarField<T>) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("input field"))
    }
}

impl<T: Real> RoundDerivatives<T> {
    pub fn of(f: &ScalarField<T>) -> Result<Self> {
        check_finite(f)?;
        let g = f.grid();
        let c = analyze(f);
        let mut lap = c.clone();
        for l in 0..=c.bandlimit() {
            let k = -T::from_usize_lossy(l * (l + 1));
            for m in -(l as i64)..=(l as i64) {
                lap.set(l, m, lap.get(l, m) * k);
            }
        }
        Ok(Self {
            d_theta: synthesize_derivative(&c, g, 1, 0)?,
            d_phi: synthesize_derivative(&c, g, 0, 1)?,
            d_theta_theta: synthesize_derivative(&c, g, 2, 0)?,
            d_theta_phi: synthesize_derivative(&c, g, 1, 1)?,
            d_phi_phi: synthesize_derivative(&c, g, 0, 2)?,
            laplacian: synthesize_derivative(&lap, g, 0, 0)?,
        })
    }

    pub fn gradient(&self) -> VectorFieldSph<T> {
        VectorFieldSph::new(
            Arc::clone(self.d_theta.grid()),
            self.d_theta.values().to_vec(),
            self.d_phi.values().to_vec(),
        )
        .expect("shape")
    }

    /// Covariant Hessian with `Γ^θ_φφ = −sinθ cosθ`, `Γ^φ_θφ = cot θ`.
    pub fn hessian(&self) -> SymTensorField<T> {
        let g = self.d_theta.grid();
        let n = g.len();
        let mut tt = Vec::with_capacity(n);
        let mut tp = Vec::with_capacity(n);
        let mut pp = Vec::with_capacity(n);
        for i in 0..g.n_theta() {
            let (s, c) = (g.sin_theta()[i], g.cos_theta()[i]);
            for j in 0..g.n_phi() {
                let k = g.index(i, j);
                let (ft, fp) = (self.d_theta.values()[k], self.d_phi.values()[k]);
                tt.push(self.d_theta_theta.values()[k]);
                tp.push(self.d_theta_phi.values()[k] - c / s * fp);
                pp.push(self.d_phi_phi.values()[k] + s * c * ft);
            }
        }
        SymTensorField::from_parts(g, tt, tp, pp, MetricTag::Round)
    }
}

/// `Δ₀ f`, applied as the multiplier `−l(l+1)` on the coefficients.
pub fn laplacian0<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    check_finite(f)?;
    let mut c = analyze(f);
    for l in 0..=c.bandlimit() {
        let k = -T::from_usize_lossy(l * (l + 1));
        for m in -(l as i64)..=(l as i64) {
            c.set(l, m, c.get(l, m) * k);
        }
    }
    synthesize_derivative(&c, f.grid(), 0, 0)
}

/// `df` in coordinate components `(∂_θ f, ∂_φ f)`.
pub fn gradient0<T: Real>(f: &ScalarField<T>) -> Result<VectorFieldSph<T>> {
    check_finite(f)?;
    let c = analyze(f);
    let g = f.grid();
    let dt = synthesize_derivative(&c, g, 1, 0)?;
    let dp = synthesize_derivative(&c, g, 0, 1)?;
    Ok(VectorFieldSph::new(Arc::clone(g), dt.into_values(), dp.into_values()).expect("shape"))
}

/// `df` and `Δ₀ f` from a single analysis.
pub fn gradient_and_laplacian0<T: Real>(f: &ScalarField<T>) -> Result<(VectorFieldSph<T>, ScalarField<T>)> {
    check_finite(f)?;
    let mut c = analyze(f);
    let g = f.grid();
    let dt = synthesize_derivative(&c, g, 1, 0)?;
    let dp = synthesize_derivative(&c, g, 0, 1)?;
    for l in 0..=c.bandlimit() {
        let k = -T::from_usize_lossy(l * (l + 1));
        for m in -(l as i64)..=(l as i64) {
            c.set(l, m, c.get(l, m) * k);
        }
    }
    let lap = synthesize_derivative(&c, g, 0, 0)?;
    Ok((VectorFieldSph::new(Arc::clone(g), dt.into_values(), dp.into_values()).expect("shape"), lap))
}

/// Covariant Hessian of `f` on `(S², dΩ²)`.
pub fn hessian0<T: Real>(f: &ScalarField<T>) -> Result<SymTensorField<T>> {
    Ok(RoundDerivatives::of(f)?.hessian())
}

/// `∫ f dΩ` by the product rule `Σ_ij f_ij w_i 2π/N_φ`, summed ring by ring
/// in a fixed order.
pub fn integrate<T: Real>(f: &ScalarField<T>) -> T {
    let g = f.grid();
    let np = g.n_phi();
    let mut total = T::zero();
    for i in 0..g.n_theta() {
        let ring: T = f.values()[i * np..(i + 1) * np].iter().copied().sum();
        total += ring * g.weights()[i];
    }
    total * g.phi_weight()
}
