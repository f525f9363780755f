//! Symmetric (0,2) and (0,3) tensor fields in spherical coordinate components.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{same_grid, ScalarField, SphereGrid};

/// Which metric a tensor's index operations refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MetricTag {
    /// `dΩ²`
    Round,
    /// `γ = ω² dΩ²`
    Conformal,
}

/// Symmetric covariant 2-tensor `T_θθ, T_θφ, T_φφ` per node.
#[derive(Debug, Clone)]
pub struct SymTensorField<T> {
    grid: Arc<SphereGrid<T>>,
    pub tt: Vec<T>,
    pub tp: Vec<T>,
    pub pp: Vec<T>,
    pub metric: MetricTag,
}

impl<T: Real> SymTensorField<T> {
    pub fn new(grid: Arc<SphereGrid<T>>, tt: Vec<T>, tp: Vec<T>, pp: Vec<T>, metric: MetricTag) -> Result<Self> {
        let n = grid.len();
        if tt.len() != n || tp.len() != n || pp.len() != n {
            return Err(Error::GridMismatch);
        }
        if tt.iter().chain(&tp).chain(&pp).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("symmetric tensor"));
        }
        Ok(Self { grid, tt, tp, pp, metric })
    }

    pub(crate) fn from_parts(grid: &Arc<SphereGrid<T>>, tt: Vec<T>, tp: Vec<T>, pp: Vec<T>, metric: MetricTag) -> Self {
        Self {
            grid: Arc::clone(grid),
            tt,
            tp,
            pp,
            metric,
        }
    }

    pub fn zeros(grid: &Arc<SphereGrid<T>>, metric: MetricTag) -> Self {
        let n = grid.len();
        Self::from_parts(grid, vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], metric)
    }

    /// `dΩ²` itself.
    pub fn round_metric(grid: &Arc<SphereGrid<T>>) -> Self {
        Self::conformal_metric_of(grid, |_| T::one(), MetricTag::Round)
    }

    /// `γ = ω² dΩ²`.
    pub fn conformal_metric(omega: &ScalarField<T>) -> Self {
        let w = omega.values();
        Self::conformal_metric_of(omega.grid(), |k| w[k] * w[k], MetricTag::Conformal)
    }

    fn conformal_metric_of(grid: &Arc<SphereGrid<T>>, factor: impl Fn(usize) -> T, metric: MetricTag) -> Self {
        let n = grid.len();
        let mut tt = Vec::with_capacity(n);
        let mut pp = Vec::with_capacity(n);
        for i in 0..grid.n_theta() {
            let s2 = grid.sin_theta()[i] * grid.sin_theta()[i];
            for j in 0..grid.n_phi() {
                let f = factor(grid.index(i, j));
                tt.push(f);
                pp.push(f * s2);
            }
        }
        Self::from_parts(grid, tt, vec![T::zero(); n], pp, metric)
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, k: usize) -> [T; 3] {
        [self.tt[k], self.tp[k], self.pp[k]]
    }

    /// Component `T_ab`, `a, b ∈ {0 = θ, 1 = φ}`.
    #[inline]
    pub fn component(&self, k: usize, a: usize, b: usize) -> T {
        match a + b {
            0 => self.tt[k],
            1 => self.tp[k],
            _ => self.pp[k],
        }
    }

    pub fn with_metric(mut self, metric: MetricTag) -> Self {
        self.metric = metric;
        self
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let z = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect::<Vec<_>>();
        Ok(Self::from_parts(
            &self.grid,
            z(&self.tt, &other.tt),
            z(&self.tp, &other.tp),
            z(&self.pp, &other.pp),
            self.metric,
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, k: T) -> Self {
        let s = |v: &[T]| v.iter().map(|&x| x * k).collect::<Vec<_>>();
        Self::from_parts(&self.grid, s(&self.tt), s(&self.tp), s(&self.pp), self.metric)
    }

    /// Pointwise product with a scalar field.
    pub fn scale_by(&self, f: &ScalarField<T>) -> Self {
        let w = f.values();
        let s = |v: &[T]| v.iter().zip(w).map(|(&x, &y)| x * y).collect::<Vec<_>>();
        Self::from_parts(&self.grid, s(&self.tt), s(&self.tp), s(&self.pp), self.metric)
    }

    /// `g₀^{ij} T_ij`.
    pub fn round_trace(&self) -> ScalarField<T> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.len());
        for i in 0..g.n_theta() {
            let s2 = g.sin_theta()[i] * g.sin_theta()[i];
            for j in 0..g.n_phi() {
                let k = g.index(i, j);
                out.push(self.tt[k] + self.pp[k] / s2);
            }
        }
        ScalarField::from_vec_unchecked(Arc::clone(g), out)
    }

    /// `g₀^{ik} g₀^{jl} T_ij T_kl`.
    pub fn round_norm2(&self) -> ScalarField<T> {
        let g = &self.grid;
        let two = T::lit(2.0);
        let mut out = Vec::with_capacity(g.len());
        for i in 0..g.n_theta() {
            let s2 = g.sin_theta()[i] * g.sin_theta()[i];
            for j in 0..g.n_phi() {
                let k = g.index(i, j);
                out.push(self.tt[k] * self.tt[k] + two * self.tp[k] * self.tp[k] / s2 + self.pp[k] * self.pp[k] / (s2 * s2));
            }
        }
        ScalarField::from_vec_unchecked(Arc::clone(g), out)
    }

    /// Trace-free part with respect to `g₀`.
    pub fn round_trace_free(&self) -> Self {
        let tr = self.round_trace();
        let half = T::lit(0.5);
        let g0 = Self::round_metric(&self.grid).scale_by(&tr.map(|t| t * half));
        self.sub(&g0).expect("same grid").with_metric(self.metric)
    }

    pub fn max_abs(&self) -> T {
        self.tt
            .iter()
            .chain(&self.tp)
            .chain(&self.pp)
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.max_abs())
    }
}

/// Position of the symmetric pair `(j, k)` in `[θθ, θφ, φφ]`.
#[inline]
pub fn pair_index(j: usize, k: usize) -> usize {
    j + k
}

/// Covariant 3-tensor `S_ijk` symmetric in its last two slots, e.g. `∇T`.
/// Components at node `n` are stored as `[S_θ(θθ), S_θ(θφ), S_θ(φφ), S_φ(θθ), S_φ(θφ), S_φ(φφ)]`.
#[derive(Debug, Clone)]
pub struct Tensor3Field<T> {
    grid: Arc<SphereGrid<T>>,
    pub comps: Vec<[T; 6]>,
}

impl<T: Real> Tensor3Field<T> {
    pub fn new(grid: Arc<SphereGrid<T>>, comps: Vec<[T; 6]>) -> Result<Self> {
        if comps.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        &self.grid
    }

    #[inline]
    pub fn get(&self, n: usize, i: usize, j: usize, k: usize) -> T {
        self.comps[n][3 * i + pair_index(j, k)]
    }

    /// Largest `|S_ijk − S_jik|` over nodes and indices, in coordinate components.
    pub fn max_first_pair_asymmetry(&self) -> T {
        self.comps.iter().fold(T::zero(), |m, c| {
            // S_θ(φk) vs S_φ(θk) for k = θ, φ
            let d1 = (c[1] - c[3]).abs();
            let d2 = (c[2] - c[4]).abs();
            m.max(d1).max(d2)
        })
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .fold(T::zero(), |m, c| c.iter().fold(m, |m, v| m.max(v.abs())))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| std::array::from_fn(|q| a[q] - b[q]))
            .collect();
        Ok(Self {
            grid: Arc::clone(&self.grid),
            comps,
        })
    }
}
