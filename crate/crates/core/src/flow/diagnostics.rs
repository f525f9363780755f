use serde::{Deserialize, Serialize};

use crate::conformal::{gamma_norm2, grad_sym2_with, NormArg};
use crate::error::Result;
use crate::lightcone::{gauss_residual_with, quantities_with, ConformalFactor, LightconeQuantities, Workspace};
use crate::scalar::Real;
use crate::spectral::{analyze, gradient0, HarmonicCoeffs};

/// Scalar summary of one cross section.
///
/// Fields that are undefined when `H²` fails to be positive somewhere are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord<T> {
    pub t: T,
    pub vol: T,
    pub h2_min: T,
    pub h2_max: T,
    pub r_min: T,
    pub r_max: T,
    pub a_ring_sq_max: T,
    /// `(σ, max f_σ)`.
    pub f_sigma: Vec<(T, Option<T>)>,
    pub grad_h2_sq_max: T,
    pub psi: Option<T>,
    pub gauss_residual: T,
    pub diam_lo: T,
    pub diam_hi: T,
    pub grad_ineq_slack: T,
    pub omega_min: T,
    pub omega_max: T,
    /// `max |A|²/(H²)²`.
    pub a_ratio_max: Option<T>,
    /// `Σ_l l^{2k} |ĉ_l(H²)|²` for `k = 2, 3`.
    pub h2_sobolev: [T; 2],
}

impl<T: Real> DiagnosticsRecord<T> {
    pub fn h2_oscillation(&self) -> T {
        self.h2_max - self.h2_min
    }

    pub fn f_sigma_for(&self, sigma: T) -> Option<T> {
        self.f_sigma.iter().find(|(s, _)| (*s - sigma).abs() <= T::epsilon()).and_then(|(_, v)| *v)
    }
}

/// Sobolev-type seminorm of the spectral coefficients.
pub fn sobolev_seminorm<T: Real>(c: &HarmonicCoeffs<T>, k: i32) -> T {
    (1..=c.bandlimit())
        .map(|l| T::from_usize_lossy(l).powi(2 * k) * c.degree_power(l))
        .sum()
}

pub fn diagnostics<T: Real>(omega: &ConformalFactor<T>, sigmas: &[T], k0: T) -> Result<DiagnosticsRecord<T>> {
    let ws = Workspace::new(omega)?;
    let q = quantities_with(omega, &ws);
    diagnostics_with(omega, &ws, &q, sigmas, k0)
}

pub(crate) fn diagnostics_with<T: Real>(
    omega: &ConformalFactor<T>,
    ws: &Workspace<T>,
    q: &LightconeQuantities<T>,
    sigmas: &[T],
    k0: T,
) -> Result<DiagnosticsRecord<T>> {
    let w = omega.field();
    let a_ring2 = gamma_norm2(w, NormArg::Sym2(&q.a_ring))?;
    let a2 = gamma_norm2(w, NormArg::Sym2(&q.a))?;
    let grad_h2 = gamma_norm2(w, NormArg::OneForm(&gradient0(&q.h2)?))?;
    let grad_a = gamma_norm2(w, NormArg::Tensor3(&grad_sym2_with(&ws.frame, &q.a)?))?;

    let h2 = q.h2.values();
    let positive = h2.iter().all(|&h| h > T::zero());
    let max_over = |f: &dyn Fn(usize) -> T| (0..h2.len()).map(f).fold(T::neg_infinity(), T::max);

    let f_sigma = sigmas
        .iter()
        .map(|&s| {
            let v = positive.then(|| max_over(&|k| h2[k].powf(s) * a_ring2.values()[k] / (h2[k] * h2[k])));
            (s, v)
        })
        .collect();
    let psi = positive.then(|| max_over(&|k| grad_h2.values()[k] / h2[k] + k0 * a_ring2.values()[k]));
    let a_ratio_max = positive.then(|| max_over(&|k| a2.values()[k] / (h2[k] * h2[k])));
    let three_quarters = T::lit(0.75);
    let slack = (0..h2.len())
        .map(|k| grad_a.values()[k] - three_quarters * grad_h2.values()[k])
        .fold(T::infinity(), T::min);
    let h2c = analyze(&q.h2);
    Ok(DiagnosticsRecord {
        t: T::zero(),
        vol: q.vol,
        h2_min: q.h2.min(),
        h2_max: q.h2.max(),
        r_min: q.r.min(),
        r_max: q.r.max(),
        a_ring_sq_max: a_ring2.max(),
        f_sigma,
        grad_h2_sq_max: grad_h2.max(),
        psi,
        gauss_residual: gauss_residual_with(omega, q)?,
        diam_lo: T::PI() * w.min(),
        diam_hi: T::PI() * w.max(),
        grad_ineq_slack: slack,
        omega_min: w.min(),
        omega_max: w.max(),
        a_ratio_max,
        h2_sobolev: [sobolev_seminorm(&h2c, 2), sobolev_seminorm(&h2c, 3)],
    })
}

/// The record of `√c · ω` expressed through the record of `ω`: every entry
/// picks up the power of `c` fixed by its scaling weight.
pub(crate) fn rescale_record<T: Real>(r: &DiagnosticsRecord<T>, c: T, t_new: T) -> DiagnosticsRecord<T> {
    let sc = c.sqrt();
    let (c2, c3) = (c * c, c * c * c);
    DiagnosticsRecord {
        t: t_new,
        vol: r.vol * c,
        h2_min: r.h2_min / c,
        h2_max: r.h2_max / c,
        r_min: r.r_min / c,
        r_max: r.r_max / c,
        a_ring_sq_max: r.a_ring_sq_max / c2,
        f_sigma: r.f_sigma.iter().map(|&(s, v)| (s, v.map(|v| v / c.powf(s)))).collect(),
        grad_h2_sq_max: r.grad_h2_sq_max / c3,
        psi: r.psi.map(|v| v / c2),
        gauss_residual: r.gauss_residual / c,
        diam_lo: r.diam_lo * sc,
        diam_hi: r.diam_hi * sc,
        grad_ineq_slack: r.grad_ineq_slack / c3,
        omega_min: r.omega_min * sc,
        omega_max: r.omega_max * sc,
        a_ratio_max: r.a_ratio_max,
        h2_sobolev: [r.h2_sobolev[0] / c2, r.h2_sobolev[1] / c2],
    }
}
