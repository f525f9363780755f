use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use super::grid::SphereGrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One real value per grid node, row-major `[i][j]`.
#[derive(Debug, Clone)]
pub struct ScalarField<T> {
    grid: Arc<SphereGrid<T>>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: Arc<SphereGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee the shape.
    pub(crate) fn from_vec_unchecked(grid: Arc<SphereGrid<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: &Arc<SphereGrid<T>>, value: T) -> Self {
        Self {
            values: vec![value; grid.len()],
            grid: Arc::clone(grid),
        }
    }

    /// Samples `f(θ, φ)` at every node.
    pub fn from_fn(grid: &Arc<SphereGrid<T>>, mut f: impl FnMut(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_theta() {
            let t = grid.theta()[i];
            for &p in grid.phi() {
                values.push(f(t, p));
            }
        }
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    /// Samples `f(x, y, z)` on the unit sphere.
    pub fn from_cartesian(grid: &Arc<SphereGrid<T>>, mut f: impl FnMut([T; 3]) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_theta() {
            for j in 0..grid.n_phi() {
                values.push(f(grid.position(i, j)));
            }
        }
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Maximum pointwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    pub fn scale(&self, k: T) -> Self {
        self.map(|v| v * k)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn same_grid<T: Real>(a: &Arc<SphereGrid<T>>, b: &Arc<SphereGrid<T>>) -> bool {
    Arc::ptr_eq(a, b)
        || (a.bandlimit() == b.bandlimit() && a.n_theta() == b.n_theta() && a.n_phi() == b.n_phi())
}

macro_rules! field_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<T: Real> $trait for &ScalarField<T> {
            type Output = ScalarField<T>;
            fn $method(self, rhs: Self) -> ScalarField<T> {
                assert!(same_grid(&self.grid, &rhs.grid), "fields on different grids");
                ScalarField {
                    grid: Arc::clone(&self.grid),
                    values: self.values.iter().zip(&rhs.values).map(|(&a, &b)| a $op b).collect(),
                }
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);
field_binop!(Mul, mul, *);

/// Real spherical-harmonic coefficients `c_{l,m}`, `-l <= m <= l`, for the
/// orthonormal real basis
///
/// * `Y_{l,0}  = q_l0(θ)`
/// * `Y_{l,m}  = √2 q_lm(θ) cos(mφ)` for `m > 0`
/// * `Y_{l,-m} = √2 q_lm(θ) sin(mφ)` for `m > 0`
///
/// without Condon–Shortley phase, so `(Y_{1,1}, Y_{1,-1}, Y_{1,0}) = √(3/4π) (x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoeffs<T> {
    bandlimit: usize,
    data: Vec<T>,
}

impl<T: Real> HarmonicCoeffs<T> {
    pub fn zeros(bandlimit: usize) -> Self {
        Self {
            bandlimit,
            data: vec![T::zero(); (bandlimit + 1) * (bandlimit + 1)],
        }
    }

    /// Coefficients of a single harmonic `value · Y_{l,m}`.
    pub fn single(bandlimit: usize, l: usize, m: i64, value: T) -> Self {
        let mut c = Self::zeros(bandlimit);
        c.set(l, m, value);
        c
    }

    #[inline]
    pub fn index(l: usize, m: i64) -> usize {
        debug_assert!(m.unsigned_abs() as usize <= l);
        (l * l + l).wrapping_add_signed(m as isize)
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    #[inline]
    pub fn get(&self, l: usize, m: i64) -> T {
        self.data[(l * l + l).wrapping_add_signed(m as isize)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, m: i64, value: T) {
        self.data[(l * l + l).wrapping_add_signed(m as isize)] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// `Σ c²`; equals `∫ f² dΩ` for the synthesized field (Parseval).
    pub fn norm2(&self) -> T {
        self.data.iter().map(|&c| c * c).sum()
    }

    /// `Σ_{l >= lmin} Σ_m c²`.
    pub fn tail_norm2(&self, lmin: usize) -> T {
        let start = lmin * lmin;
        self.data.get(start..).map_or(T::zero(), |s| s.iter().map(|&c| c * c).sum())
    }

    /// Power per degree, `Σ_m c_{l,m}²`.
    pub fn degree_power(&self, l: usize) -> T {
        self.data[l * l..(l + 1) * (l + 1)].iter().map(|&c| c * c).sum()
    }

    /// Truncates or zero-pads to a new bandlimit.
    pub fn resized(&self, bandlimit: usize) -> Self {
        let mut out = Self::zeros(bandlimit);
        let n = (bandlimit.min(self.bandlimit) + 1).pow(2);
        out.data[..n].copy_from_slice(&self.data[..n]);
        out
    }
}

/// Covariant components `(V_θ, V_φ)` of a one-form on the sphere, e.g. `df`.
///
/// The round norm is `|V|²₀ = V_θ² + V_φ² / sin²θ`.
#[derive(Debug, Clone)]
pub struct VectorFieldSph<T> {
    grid: Arc<SphereGrid<T>>,
    pub theta: Vec<T>,
    pub phi: Vec<T>,
}

impl<T: Real> VectorFieldSph<T> {
    pub fn new(grid: Arc<SphereGrid<T>>, theta: Vec<T>, phi: Vec<T>) -> Result<Self> {
        if theta.len() != grid.len() || phi.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if theta.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector field"));
        }
        Ok(Self { grid, theta, phi })
    }

    pub fn zeros(grid: &Arc<SphereGrid<T>>) -> Self {
        Self {
            grid: Arc::clone(grid),
            theta: vec![T::zero(); grid.len()],
            phi: vec![T::zero(); grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        &self.grid
    }

    /// Pointwise `|V|²` with respect to the round metric.
    pub fn round_norm2(&self) -> ScalarField<T> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.len());
        for i in 0..g.n_theta() {
            let s2 = g.sin_theta()[i] * g.sin_theta()[i];
            for j in 0..g.n_phi() {
                let k = g.index(i, j);
                out.push(self.theta[k] * self.theta[k] + self.phi[k] * self.phi[k] / s2);
            }
        }
        ScalarField::from_vec_unchecked(Arc::clone(g), out)
    }

    pub fn max_abs(&self) -> T {
        self.theta
            .iter()
            .chain(&self.phi)
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Multiplies both components by a scalar field.
    pub fn scaled_by(&self, f: &ScalarField<T>) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            theta: self.theta.iter().zip(f.values()).map(|(&a, &b)| a * b).collect(),
            phi: self.phi.iter().zip(f.values()).map(|(&a, &b)| a * b).collect(),
        }
    }
}
