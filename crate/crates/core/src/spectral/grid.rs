use std::sync::Arc;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rustfft::{Fft, FftPlanner};

use super::legendre::{gauss_legendre, legendre_derivatives, legendre_table, tri_len};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Gauss–Legendre (in cos θ) × equiangular (in φ) quadrature grid with
/// precomputed harmonic tables up to the bandlimit.
///
/// Node `(i, j)` sits at colatitude `theta[i]` (ascending, strictly inside
/// `(0, π)`) and longitude `phi[j] = 2πj / n_phi`. Fields are stored row-major.
/// Forward and inverse plans of length `n_phi`.
pub(crate) struct RingFft<T> {
    pub(crate) forward: Arc<dyn Fft<T>>,
    pub(crate) inverse: Arc<dyn Fft<T>>,
}

impl<T> std::fmt::Debug for RingFft<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RingFft").field("len", &self.forward.len()).finish()
    }
}

#[derive(Debug)]
pub struct SphereGrid<T> {
    bandlimit: usize,
    oversample: Ratio<u32>,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<T>,
    cos_theta: Vec<T>,
    sin_theta: Vec<T>,
    weights: Vec<T>,
    phi: Vec<T>,
    cos_phi: Vec<T>,
    sin_phi: Vec<T>,
    ring_fft: RingFft<T>,
    /// `q_lm(θ_i)` at `i * tri_len + tri_index(l, m)`.
    plm: Vec<T>,
    dplm: Vec<T>,
    d2plm: Vec<T>,
}

/// Default oversampling factor.
pub fn default_oversample() -> Ratio<u32> {
    Ratio::from_integer(2)
}

impl<T: Real> SphereGrid<T> {
    /// Builds the grid for bandlimit `l` with `N_θ = ⌈os·(L+1)⌉` and
    /// `N_φ = ⌈os·(2L+1)⌉`.
    pub fn new(l: usize, oversample: Ratio<u32>) -> Result<Arc<Self>> {
        if l < 4 {
            return Err(Error::BandlimitTooSmall(l));
        }
        if *oversample.denom() == 0 || oversample < Ratio::from_integer(1) {
            return Err(invalid("oversample", format!("{oversample} must be >= 1")));
        }
        let lu = u32::try_from(l).map_err(|_| invalid("bandlimit", "too large"))?;
        let n_theta = (oversample * Ratio::from_integer(lu + 1)).ceil().to_integer() as usize;
        let n_phi = (oversample * Ratio::from_integer(2 * lu + 1)).ceil().to_integer() as usize;
        Ok(Arc::new(Self::with_sizes(l, oversample, n_theta, n_phi)))
    }

    /// Grid with explicit node counts; used when reading snapshots whose
    /// header fixes the layout.
    pub fn with_counts(l: usize, n_theta: usize, n_phi: usize) -> Result<Arc<Self>> {
        if l < 4 {
            return Err(Error::BandlimitTooSmall(l));
        }
        if n_theta < l + 1 || n_phi < 2 * l + 1 {
            return Err(invalid(
                "grid",
                format!("{n_theta} x {n_phi} nodes cannot resolve bandlimit {l}"),
            ));
        }
        let os = Ratio::new(n_phi as u32, 2 * l as u32 + 1).max(Ratio::new(n_theta as u32, l as u32 + 1));
        Ok(Arc::new(Self::with_sizes(l, os, n_theta, n_phi)))
    }

    fn with_sizes(l: usize, oversample: Ratio<u32>, n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let nt = tri_len(l);
        let mut plm = Vec::with_capacity(n_theta * nt);
        let mut dplm = Vec::with_capacity(n_theta * nt);
        let mut d2plm = Vec::with_capacity(n_theta * nt);
        let mut theta = Vec::with_capacity(n_theta);
        let mut sin_theta = Vec::with_capacity(n_theta);
        for &c in &x {
            let s = (1.0 - c * c).sqrt();
            theta.push(T::lit(c.acos()));
            sin_theta.push(T::lit(s));
            let q = legendre_table(l, c, s);
            let (dq, d2q) = legendre_derivatives(l, c, s, &q);
            plm.extend(q.into_iter().map(T::lit));
            dplm.extend(dq.into_iter().map(T::lit));
            d2plm.extend(d2q.into_iter().map(T::lit));
        }
        let phi: Vec<f64> = (0..n_phi)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64)
            .collect();
        let mut planner = FftPlanner::new();
        let ring_fft = RingFft {
            forward: planner.plan_fft_forward(n_phi),
            inverse: planner.plan_fft_inverse(n_phi),
        };
        Self {
            bandlimit: l,
            oversample,
            n_theta,
            n_phi,
            theta,
            cos_theta: x.into_iter().map(T::lit).collect(),
            sin_theta,
            weights: w.into_iter().map(T::lit).collect(),
            cos_phi: phi.iter().map(|p| T::lit(p.cos())).collect(),
            sin_phi: phi.iter().map(|p| T::lit(p.sin())).collect(),
            phi: phi.into_iter().map(T::lit).collect(),
            ring_fft,
            plm,
            dplm,
            d2plm,
        }
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn oversample(&self) -> Ratio<u32> {
        self.oversample
    }

    pub fn oversample_f64(&self) -> f64 {
        self.oversample.to_f64().unwrap_or(f64::NAN)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn cos_theta(&self) -> &[T] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[T] {
        &self.sin_theta
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    /// Longitudinal quadrature weight `2π / N_φ`.
    pub fn phi_weight(&self) -> T {
        T::TAU() / T::from_usize_lossy(self.n_phi)
    }

    /// Unit position vector of node `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> [T; 3] {
        let (s, c) = (self.sin_theta[i], self.cos_theta[i]);
        let (sp, cp) = (self.sin_phi[j], self.cos_phi[j]);
        [s * cp, s * sp, c]
    }

    /// `(sin φ_j, cos φ_j)`.
    #[inline]
    pub fn phi_sin_cos(&self, j: usize) -> (T, T) {
        (self.sin_phi[j], self.cos_phi[j])
    }

    pub(crate) fn ring_fft(&self) -> &RingFft<T> {
        &self.ring_fft
    }

    /// Legendre table row at ring `i` for the requested θ-derivative order.
    #[inline]
    pub(crate) fn legendre_row(&self, i: usize, order: usize) -> &[T] {
        let nt = tri_len(self.bandlimit);
        let table = match order {
            0 => &self.plm,
            1 => &self.dplm,
            2 => &self.d2plm,
            _ => unreachable!("θ-derivative order {order}"),
        };
        &table[i * nt..(i + 1) * nt]
    }
}
