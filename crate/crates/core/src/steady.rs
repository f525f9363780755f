//! The constant-curvature family `ω = c / (√(1+|a|²) + a·x)`, Lorentz boosts
//! acting on cross sections, and projection of an arbitrary `ω` onto the family.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lightcone::ConformalFactor;
use crate::scalar::Real;
use crate::spectral::{analyze, eval_at, HarmonicCoeffs, ScalarField, SphereGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateParams<T> {
    pub c: T,
    pub a: [T; 3],
}

impl<T: Real> SteadyStateParams<T> {
    pub fn new(c: T, a: [T; 3]) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(invalid("c", "must be positive and finite"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("a", "must be finite"));
        }
        Ok(Self { c, a })
    }

    pub fn round(c: T) -> Result<Self> {
        Self::new(c, [T::zero(); 3])
    }

    pub fn a_norm(&self) -> T {
        self.a.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// `ω` at a unit vector `x`.
    pub fn omega_at(&self, x: [T; 3]) -> T {
        let gamma = (T::one() + self.a_norm().powi(2)).sqrt();
        self.c / (gamma + self.a[0] * x[0] + self.a[1] * x[1] + self.a[2] * x[2])
    }

    /// `H² ≡ 4/c²` on the whole family.
    pub fn h2(&self) -> T {
        T::lit(4.0) / (self.c * self.c)
    }

    /// `Vol = 4πc²`.
    pub fn volume(&self) -> T {
        T::lit(4.0) * T::PI() * self.c * self.c
    }
}

/// A pure boost with rapidity `β` along the unit axis `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostSpec<T> {
    pub rapidity: T,
    pub axis: [T; 3],
}

impl<T: Real> BoostSpec<T> {
    pub fn new(rapidity: T, axis: [T; 3]) -> Result<Self> {
        let norm = axis.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !rapidity.is_finite() {
            return Err(invalid("rapidity", "must be finite"));
        }
        if (norm - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
            return Err(invalid("axis", "must be a unit vector"));
        }
        Ok(Self { rapidity, axis })
    }

    /// The boost whose image of the unit round section is the family member
    /// with `c = 1` and the given `a`, i.e. `a = sinh(β) n`.
    pub fn from_a(a: [T; 3]) -> Result<Self> {
        let norm = a.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm == T::zero() {
            return Self::new(T::zero(), [T::zero(), T::zero(), T::one()]);
        }
        Self::new(norm.asinh(), a.map(|v| v / norm))
    }

    pub fn a(&self) -> [T; 3] {
        let s = self.rapidity.sinh();
        self.axis.map(|v| s * v)
    }

    pub fn inverse(&self) -> Self {
        Self {
            rapidity: -self.rapidity,
            axis: self.axis,
        }
    }

    /// Image of the null direction `(−1, x)`, returned as `(μ, x′)` with
    /// `Λ(−1, x) = μ (−1, x′)`.
    pub fn act_on_direction(&self, x: [T; 3]) -> (T, [T; 3]) {
        let (sh, ch) = (self.rapidity.sinh(), self.rapidity.cosh());
        let n = self.axis;
        let par = n[0] * x[0] + n[1] * x[1] + n[2] * x[2];
        let mu = ch - sh * par;
        let new_par = -sh + ch * par;
        let spatial: [T; 3] = std::array::from_fn(|q| x[q] + (new_par - par) * n[q]);
        (mu, spatial.map(|v| v / mu))
    }
}

pub fn mobius_omega<T: Real>(p: &SteadyStateParams<T>, grid: &Arc<SphereGrid<T>>) -> Result<ConformalFactor<T>> {
    let p = SteadyStateParams::new(p.c, p.a)?;
    ConformalFactor::new(ScalarField::from_cartesian(grid, |x| p.omega_at(x)))
}

fn direction_angles<T: Real>(x: [T; 3]) -> (T, T) {
    let z = x[2].max(-T::one()).min(T::one());
    (z.acos(), x[1].atan2(x[0]))
}

/// Pushes the cross section forward along the boost; the result is sampled on
/// the same grid by spectral evaluation of `ω` at the preimage directions.
pub fn boost_cross_section<T: Real>(omega: &ConformalFactor<T>, b: &BoostSpec<T>) -> Result<ConformalFactor<T>> {
    let b = BoostSpec::new(b.rapidity, b.axis)?;
    let coeffs = analyze(omega.field());
    let inv = b.inverse();
    let g = omega.grid();
    let out = ScalarField::from_cartesian(g, |xp| {
        let (mu_inv, x) = inv.act_on_direction(xp);
        let (th, ph) = direction_angles(x);
        // Λ(−1, x) = μ (−1, x′) with μ = 1 / μ̃.
        eval_at(&coeffs, th, ph) / mu_inv
    });
    ConformalFactor::new(out)
}

/// Projects `1/ω` onto degrees `l ≤ 1`, reads off `(c, a)`, and returns the
/// relative square norm of the `l ≥ 2` remainder.
pub fn fit_constant_curvature<T: Real>(omega: &ConformalFactor<T>) -> Result<(SteadyStateParams<T>, T)> {
    let inv = omega.field().map(|w| T::one() / w);
    let c = analyze(&inv);
    fit_from_coeffs(&c)
}

pub(crate) fn fit_from_coeffs<T: Real>(c: &HarmonicCoeffs<T>) -> Result<(SteadyStateParams<T>, T)> {
    let four_pi = T::lit(4.0) * T::PI();
    let b0 = c.get(0, 0) / four_pi.sqrt();
    let k1 = (four_pi / T::lit(3.0)).sqrt();
    let (alpha, total) = if c.bandlimit() >= 1 {
        ([c.get(1, 1) / k1, c.get(1, -1) / k1, c.get(1, 0) / k1], c.norm2())
    } else {
        ([T::zero(); 3], c.norm2())
    };
    let det = b0 * b0 - alpha.iter().map(|&v| v * v).sum::<T>();
    if !(det > T::zero()) || !(b0 > T::zero()) {
        return Err(Error::DegenerateFit(det.as_f64()));
    }
    let scale = T::one() / det.sqrt();
    let params = SteadyStateParams::new(scale, alpha.map(|v| v * scale))?;
    let tail = if c.bandlimit() >= 2 { c.tail_norm2(2) } else { T::zero() };
    let residual = if total > T::zero() { tail / total } else { T::zero() };
    Ok((params, residual))
}
