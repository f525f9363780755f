//! Extrinsic and intrinsic geometry of a cross section `Σ_ω = {r = ω}` of the
//! past lightcone `𝒩 = {t = −r}` in Minkowski space with signature (−+++).
//!
//! The null generator is `L̲ = 2∂_u = ∂_r − ∂_t`, normalized by `L̲(r) = 1`;
//! the second null normal `L` is fixed by `η(L̲, L) = 2`.

use std::sync::Arc;

use crate::conformal::{check_positive, scalar_ops_with, ConformalFrame};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{analyze, eval_at, integrate, laplacian0, RoundDerivatives, ScalarField, SphereGrid, VectorFieldSph};
use crate::tensor::{MetricTag, SymTensorField};

/// Positive conformal factor `ω`; the cross section is the graph `r = ω(x)`
/// and its induced metric is `γ = ω² dΩ²`.
#[derive(Debug, Clone)]
pub struct ConformalFactor<T>(ScalarField<T>);

impl<T: Real> ConformalFactor<T> {
    pub fn new(omega: ScalarField<T>) -> Result<Self> {
        check_positive(&omega)?;
        Ok(Self(omega))
    }

    pub fn constant(grid: &Arc<SphereGrid<T>>, value: T) -> Result<Self> {
        Self::new(ScalarField::constant(grid, value))
    }

    pub fn field(&self) -> &ScalarField<T> {
        &self.0
    }

    pub fn into_field(self) -> ScalarField<T> {
        self.0
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        self.0.grid()
    }

    /// `Vol(γ) = ∫ ω² dΩ`.
    pub fn volume(&self) -> T {
        integrate(&self.0.map(|w| w * w))
    }
}

impl<T> AsRef<ScalarField<T>> for ConformalFactor<T> {
    fn as_ref(&self) -> &ScalarField<T> {
        &self.0
    }
}

/// Every curvature quantity of `Σ_ω`.
#[derive(Debug, Clone)]
pub struct LightconeQuantities<T> {
    pub gamma: SymTensorField<T>,
    pub theta_bar: ScalarField<T>,
    pub theta: ScalarField<T>,
    pub chi_bar: SymTensorField<T>,
    pub chi: SymTensorField<T>,
    /// Covariant components `ζ_i = −ω_i / ω`.
    pub zeta: VectorFieldSph<T>,
    /// `A = θ̲ χ`.
    pub a: SymTensorField<T>,
    /// `Å = A − ½ H² γ`.
    pub a_ring: SymTensorField<T>,
    /// `H² = θ̲ θ`, the signed Lorentzian length of the mean curvature vector.
    pub h2: ScalarField<T>,
    /// Scalar curvature `R = 2K`.
    pub r: ScalarField<T>,
    /// Gauss curvature `K = θ / (2ω)`.
    pub k: ScalarField<T>,
    pub vol: T,
}

/// Intermediate results reused by diagnostics and checks.
#[derive(Debug, Clone)]
pub struct Workspace<T> {
    pub frame: ConformalFrame<T>,
    pub d_omega: RoundDerivatives<T>,
}

impl<T: Real> Workspace<T> {
    pub fn new(omega: &ConformalFactor<T>) -> Result<Self> {
        let d_omega = RoundDerivatives::of(omega.field())?;
        let frame = ConformalFrame::from_parts(omega.field(), &d_omega.gradient());
        Ok(Self { frame, d_omega })
    }
}

pub fn lightcone_quantities<T: Real>(omega: &ConformalFactor<T>) -> Result<LightconeQuantities<T>> {
    let ws = Workspace::new(omega)?;
    Ok(quantities_with(omega, &ws))
}

pub fn quantities_with<T: Real>(omega: &ConformalFactor<T>, ws: &Workspace<T>) -> LightconeQuantities<T> {
    let w = omega.field();
    let g = w.grid();
    let ops = scalar_ops_with(&ws.frame, &ws.d_omega);
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);

    let gamma = SymTensorField::conformal_metric(w);
    let theta_bar = w.map(|w| two / w);
    let inv_w = w.map(|w| one / w);
    let chi_bar = gamma.scale_by(&inv_w);

    let mut theta_v = Vec::with_capacity(g.len());
    let mut chi_factor = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let (wk, gn, lap) = (w.values()[k], ops.grad_norm2.values()[k], ops.laplacian.values()[k]);
        theta_v.push(two * (one / wk + gn / wk - lap));
        chi_factor.push((one + gn) / wk);
    }
    let theta = ScalarField::from_vec_unchecked(Arc::clone(g), theta_v);
    let chi = gamma
        .scale_by(&ScalarField::from_vec_unchecked(Arc::clone(g), chi_factor))
        .sub(&ops.hessian.scale(two))
        .expect("same grid")
        .with_metric(MetricTag::Conformal);
    let zeta = VectorFieldSph::new(
        Arc::clone(g),
        ws.frame.du().theta.iter().map(|&v| -v).collect(),
        ws.frame.du().phi.iter().map(|&v| -v).collect(),
    )
    .expect("shape");
    let a = chi.scale_by(&theta_bar);
    let h2 = &theta_bar * &theta;
    let a_ring = a
        .sub(&gamma.scale_by(&h2.map(|h| h * half)))
        .expect("same grid");
    let k = theta.zip_map(w, |t, w| t / (two * w)).expect("same grid");
    let r = k.map(|k| two * k);
    let vol = omega.volume();
    LightconeQuantities {
        gamma,
        theta_bar,
        theta,
        chi_bar,
        chi,
        zeta,
        a,
        a_ring,
        h2,
        r,
        k,
        vol,
    }
}

/// Scalar curvature computed intrinsically, `R = 2(1 − Δ₀ log ω) / ω²`,
/// without reference to any extrinsic quantity.
pub fn intrinsic_scalar_curvature<T: Real>(omega: &ConformalFactor<T>) -> Result<ScalarField<T>> {
    let w = omega.field();
    let lap = laplacian0(&w.map(|w| w.ln()))?;
    let two = T::lit(2.0);
    lap.zip_map(w, |l, w| two * (T::one() - l) / (w * w))
}

/// `max |R_intrinsic − ½ H²|` over the nodes.
pub fn gauss_residual<T: Real>(omega: &ConformalFactor<T>) -> Result<T> {
    let q = lightcone_quantities(omega)?;
    gauss_residual_with(omega, &q)
}

pub fn gauss_residual_with<T: Real>(omega: &ConformalFactor<T>, q: &LightconeQuantities<T>) -> Result<T> {
    let r = intrinsic_scalar_curvature(omega)?;
    let half = T::lit(0.5);
    Ok(r.zip_map(&q.h2, |r, h| r - half * h)?.max_abs())
}

/// Minkowski product, signature (−+++), components `(t, x, y, z)`.
#[inline]
pub fn eta<T: Real>(a: &[T; 4], b: &[T; 4]) -> T {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// The cross section as a surface in `ℝ^{3,1}`, one entry per grid node.
#[derive(Debug, Clone)]
pub struct AmbientPoints<T> {
    pub events: Vec<[T; 4]>,
    /// `∂_θ X` and `∂_φ X`.
    pub v_theta: Vec<[T; 4]>,
    pub v_phi: Vec<[T; 4]>,
    pub l_bar: Vec<[T; 4]>,
    /// Filled by [`null_frame`].
    pub l: Option<Vec<[T; 4]>>,
}

impl<T: Real> AmbientPoints<T> {
    /// `max |r + t|`, the distance of the events from `𝒩 = {v = 0}`.
    pub fn max_cone_defect(&self) -> T {
        self.events.iter().fold(T::zero(), |m, e| {
            let r = (e[1] * e[1] + e[2] * e[2] + e[3] * e[3]).sqrt();
            m.max((r + e[0]).abs())
        })
    }
}

/// Events `(−ω, ω x)`, analytic tangent vectors and the generator `L̲ = (−1, x)`.
pub fn embed<T: Real>(omega: &ConformalFactor<T>) -> Result<AmbientPoints<T>> {
    let w = omega.field();
    let g = w.grid();
    let d = RoundDerivatives::of(w)?;
    let n = g.len();
    let mut events = Vec::with_capacity(n);
    let mut v_theta = Vec::with_capacity(n);
    let mut v_phi = Vec::with_capacity(n);
    let mut l_bar = Vec::with_capacity(n);
    for i in 0..g.n_theta() {
        let (s, c) = (g.sin_theta()[i], g.cos_theta()[i]);
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let (sp, cp) = g.phi_sin_cos(j);
            let x = [s * cp, s * sp, c];
            let xt = [c * cp, c * sp, -s];
            let xp = [-s * sp, s * cp, T::zero()];
            let (wk, wt, wp) = (w.values()[k], d.d_theta.values()[k], d.d_phi.values()[k]);
            // r = |ω x| must equal −t bit for bit; normalize x against rounding.
            let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let spatial = x.map(|v| wk * v / norm);
            let r = (spatial[0] * spatial[0] + spatial[1] * spatial[1] + spatial[2] * spatial[2]).sqrt();
            events.push([-r, spatial[0], spatial[1], spatial[2]]);
            v_theta.push([-wt, wt * x[0] + wk * xt[0], wt * x[1] + wk * xt[1], wt * x[2] + wk * xt[2]]);
            v_phi.push([-wp, wp * x[0] + wk * xp[0], wp * x[1] + wk * xp[1], wp * x[2] + wk * xp[2]]);
            l_bar.push([-T::one(), x[0], x[1], x[2]]);
        }
    }
    Ok(AmbientPoints {
        events,
        v_theta,
        v_phi,
        l_bar,
        l: None,
    })
}

/// Pivot magnitude below which the per-node frame system counts as singular.
const FRAME_PIVOT_TOL: f64 = 1e-12;

/// Embeds and solves for the future null normal `L` at every node:
/// `η(L, V_θ) = η(L, V_φ) = 0`, `η(L̲, L) = 2`, `η(L, L) = 0`.
pub fn null_frame<T: Real>(omega: &ConformalFactor<T>) -> Result<AmbientPoints<T>> {
    let mut pts = embed(omega)?;
    let g = omega.grid();
    let mut l = Vec::with_capacity(pts.events.len());
    for k in 0..pts.events.len() {
        let lb = pts.l_bar[k];
        let lower = |v: [T; 4]| [-v[0], v[1], v[2], v[3]];
        // The three linear conditions leave L̲ free; pin the particular
        // solution Euclidean-orthogonal to L̲, then fix η(L, L) = 0 along L̲.
        let rows = [lower(pts.v_theta[k]), lower(pts.v_phi[k]), lower(lb), lb];
        let rhs = [T::zero(), T::zero(), T::lit(2.0), T::zero()];
        let particular = solve4(rows, rhs).map_err(|pivot| Error::SingularFrame {
            i: k / g.n_phi(),
            j: k % g.n_phi(),
            pivot: pivot.as_f64(),
        })?;
        let s = -eta(&particular, &particular) / T::lit(4.0);
        l.push(std::array::from_fn(|q| particular[q] + s * lb[q]));
    }
    pts.l = Some(l);
    Ok(pts)
}

/// Gaussian elimination with partial pivoting; returns the failing pivot.
fn solve4<T: Real>(mut a: [[T; 4]; 4], mut b: [T; 4]) -> std::result::Result<[T; 4], T> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, v| m.max(v.abs()))
        .max(T::min_positive_value());
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if a[piv][col].abs() < T::lit(FRAME_PIVOT_TOL) * scale {
            return Err(a[piv][col].abs());
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..4 {
            let f = a[row][col] / a[col][col];
            for c in col..4 {
                let v = a[col][c];
                a[row][c] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = [T::zero(); 4];
    for row in (0..4).rev() {
        let mut s = b[row];
        for c in (row + 1)..4 {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Independent finite-difference evaluation of `χ_ij = −η(∂_i ∂_j X, L)`:
/// the embedding is re-evaluated at `θ ± h`, `φ ± h` by spectral synthesis
/// of `ω` and differenced with centered second-order stencils.
pub fn extrinsic_oracle_chi<T: Real>(omega: &ConformalFactor<T>, h: T) -> Result<SymTensorField<T>> {
    let g = omega.grid();
    let theta_min = g.theta()[0];
    if !(h > T::zero()) || h >= theta_min * T::lit(0.5) {
        return Err(Error::StepOutOfRange(h.as_f64()));
    }
    let coeffs = analyze(omega.field());
    let frame = null_frame(omega)?;
    let l = frame.l.as_ref().expect("frame solved");
    let point = |t: T, p: T| -> [T; 4] {
        let w = eval_at(&coeffs, t, p);
        let (st, ct) = t.sin_cos();
        let (sp, cp) = p.sin_cos();
        [-w, w * st * cp, w * st * sp, w * ct]
    };
    let n = g.len();
    let mut tt = Vec::with_capacity(n);
    let mut tp = Vec::with_capacity(n);
    let mut pp = Vec::with_capacity(n);
    let h2 = h * h;
    let four = T::lit(4.0);
    let two = T::lit(2.0);
    for i in 0..g.n_theta() {
        let t = g.theta()[i];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let p = g.phi()[j];
            let x0 = point(t, p);
            let (xtp, xtm) = (point(t + h, p), point(t - h, p));
            let (xpp, xpm) = (point(t, p + h), point(t, p - h));
            let (xpp2, xpm2, xmp2, xmm2) = (point(t + h, p + h), point(t + h, p - h), point(t - h, p + h), point(t - h, p - h));
            let d_tt: [T; 4] = std::array::from_fn(|q| (xtp[q] - two * x0[q] + xtm[q]) / h2);
            let d_pp: [T; 4] = std::array::from_fn(|q| (xpp[q] - two * x0[q] + xpm[q]) / h2);
            let d_tp: [T; 4] = std::array::from_fn(|q| (xpp2[q] - xpm2[q] - xmp2[q] + xmm2[q]) / (four * h2));
            tt.push(-eta(&d_tt, &l[k]));
            tp.push(-eta(&d_tp, &l[k]));
            pp.push(-eta(&d_pp, &l[k]));
        }
    }
    SymTensorField::new(Arc::clone(g), tt, tp, pp, MetricTag::Conformal)
}
