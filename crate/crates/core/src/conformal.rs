//! Differential operators of the conformal metric `γ = ω² dΩ²`.
//!
//! Coordinate partial derivatives of tensor components are not smooth
//! functions on the sphere, so covariant derivatives go through the ambient
//! Cartesian components of the tensor: each of those is an ordinary scalar
//! field with a spectrally accurate gradient, and for a tangential tensor
//! `(∇⁰_X T)(Y, Z) = (D_X M)(Y, Z)` for tangent `Y, Z`. The conformal change
//! of connection is then added algebraically:
//!
//! `Γ(γ)^l_ij = Γ(g₀)^l_ij + δ^l_i u_j + δ^l_j u_i − g₀_ij g₀^{lm} u_m`, `u = log ω`.

use std::sync::Arc;

pub use crate::tensor::{MetricTag, SymTensorField, Tensor3Field};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{gradient0, RoundDerivatives, ScalarField, SphereGrid, VectorFieldSph};

/// Conformal factor together with `du = dω/ω`, shared by every operator.
#[derive(Debug, Clone)]
pub struct ConformalFrame<T> {
    omega: ScalarField<T>,
    du: VectorFieldSph<T>,
}

impl<T: Real> ConformalFrame<T> {
    pub fn new(omega: &ScalarField<T>) -> Result<Self> {
        check_positive(omega)?;
        let d = gradient0(omega)?;
        Ok(Self::from_parts(omega, &d))
    }

    /// Reuses an already computed `dω`.
    pub fn from_parts(omega: &ScalarField<T>, d_omega: &VectorFieldSph<T>) -> Self {
        let inv = omega.map(|w| T::one() / w);
        Self {
            omega: omega.clone(),
            du: d_omega.scaled_by(&inv),
        }
    }

    pub fn omega(&self) -> &ScalarField<T> {
        &self.omega
    }

    /// `du = d log ω`.
    pub fn du(&self) -> &VectorFieldSph<T> {
        &self.du
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        self.omega.grid()
    }

    /// Contorsion `C^l_ij` at node `k`, indexed `[l][i][j]`.
    #[inline]
    fn contorsion(&self, k: usize, sin_t: T) -> [[[T; 2]; 2]; 2] {
        let u = [self.du.theta[k], self.du.phi[k]];
        let g0 = [T::one(), sin_t * sin_t];
        let u_up = [u[0], u[1] / g0[1]];
        let mut c = [[[T::zero(); 2]; 2]; 2];
        for l in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut v = T::zero();
                    if l == i {
                        v += u[j];
                    }
                    if l == j {
                        v += u[i];
                    }
                    if i == j {
                        v -= g0[i] * u_up[l];
                    }
                    c[l][i][j] = v;
                }
            }
        }
        c
    }
}

pub(crate) fn check_positive<T: Real>(omega: &ScalarField<T>) -> Result<()> {
    let min = omega.min();
    if !omega.is_finite() {
        return Err(Error::NonFinite("conformal factor"));
    }
    if min <= T::zero() {
        return Err(Error::NonPositiveFactor { min: min.as_f64() });
    }
    Ok(())
}

/// `Δ_γ f`, `|∇f|²_γ` and `Hess_γ f`.
#[derive(Debug, Clone)]
pub struct ConformalScalarOps<T> {
    pub laplacian: ScalarField<T>,
    pub grad_norm2: ScalarField<T>,
    pub hessian: SymTensorField<T>,
}

pub fn conformal_scalar_ops<T: Real>(omega: &ScalarField<T>, f: &ScalarField<T>) -> Result<ConformalScalarOps<T>> {
    let frame = ConformalFrame::new(omega)?;
    omega.check_same_grid(f)?;
    let d = RoundDerivatives::of(f)?;
    Ok(scalar_ops_with(&frame, &d))
}

/// As [`conformal_scalar_ops`], from precomputed round derivatives of `f`.
pub fn scalar_ops_with<T: Real>(frame: &ConformalFrame<T>, d: &RoundDerivatives<T>) -> ConformalScalarOps<T> {
    let g = frame.grid();
    let w = frame.omega().values();
    let inv_w2: Vec<T> = w.iter().map(|&w| T::one() / (w * w)).collect();
    let laplacian = ScalarField::from_vec_unchecked(
        Arc::clone(g),
        d.laplacian.values().iter().zip(&inv_w2).map(|(&a, &b)| a * b).collect(),
    );
    let grad = d.gradient();
    let grad_norm2 = ScalarField::from_vec_unchecked(
        Arc::clone(g),
        grad.round_norm2().values().iter().zip(&inv_w2).map(|(&a, &b)| a * b).collect(),
    );
    let mut hessian = d.hessian();
    for i in 0..g.n_theta() {
        let s2 = g.sin_theta()[i] * g.sin_theta()[i];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let (ut, up) = (frame.du.theta[k], frame.du.phi[k]);
            let (ft, fp) = (grad.theta[k], grad.phi[k]);
            let inner = ut * ft + up * fp / s2;
            let two = T::lit(2.0);
            hessian.tt[k] += -two * ut * ft + inner;
            hessian.tp[k] += -(ut * fp + up * ft);
            hessian.pp[k] += -two * up * fp + s2 * inner;
        }
    }
    ConformalScalarOps {
        laplacian,
        grad_norm2,
        hessian: hessian.with_metric(MetricTag::Conformal),
    }
}

/// Orthonormal frame `(θ̂, φ̂)` at node `(i, j)` as Cartesian vectors.
#[inline]
fn frame_vectors<T: Real>(g: &SphereGrid<T>, i: usize, j: usize) -> ([T; 3], [T; 3]) {
    let (s, c) = (g.sin_theta()[i], g.cos_theta()[i]);
    let (sp, cp) = g.phi_sin_cos(j);
    ([c * cp, c * sp, -s], [-sp, cp, T::zero()])
}

/// Coordinate basis `e_a` and dual basis `e^a`, `a ∈ {θ, φ}`, as Cartesian vectors.
#[inline]
fn bases<T: Real>(g: &SphereGrid<T>, i: usize, j: usize) -> ([[T; 3]; 2], [[T; 3]; 2]) {
    let (th, ph) = frame_vectors(g, i, j);
    let s = g.sin_theta()[i];
    let e = [th, ph.map(|v| v * s)];
    let dual = [th, ph.map(|v| v / s)];
    (e, dual)
}

/// Gradients of a list of scalar fields (Cartesian tensor components).
fn gradients<T: Real>(grid: &Arc<SphereGrid<T>>, comps: Vec<Vec<T>>) -> Result<Vec<VectorFieldSph<T>>> {
    comps
        .into_iter()
        .map(|v| gradient0(&ScalarField::from_vec_unchecked(Arc::clone(grid), v)))
        .collect()
}

/// The six unique Cartesian pairs `(p, q)`, `p <= q`.
const CART_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[inline]
fn cart_pair(p: usize, q: usize) -> usize {
    let (a, b) = if p <= q { (p, q) } else { (q, p) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// `∇_i T_jk` for a symmetric (0,2) tensor, covariant derivative of `γ`.
pub fn covariant_grad_sym2<T: Real>(omega: &ScalarField<T>, t: &SymTensorField<T>) -> Result<Tensor3Field<T>> {
    let frame = ConformalFrame::new(omega)?;
    grad_sym2_with(&frame, t)
}

pub fn grad_sym2_with<T: Real>(frame: &ConformalFrame<T>, t: &SymTensorField<T>) -> Result<Tensor3Field<T>> {
    let g = frame.grid();
    if !crate::spectral::same_grid(g, t.grid()) {
        return Err(Error::GridMismatch);
    }
    let n = g.len();
    // Cartesian components M_pq = Σ T_ab e^a_p e^b_q.
    let mut cart = vec![vec![T::zero(); n]; 6];
    for i in 0..g.n_theta() {
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let (_, dual) = bases(g, i, j);
            for (slot, &(p, q)) in CART_PAIRS.iter().enumerate() {
                let mut v = T::zero();
                for a in 0..2 {
                    for b in 0..2 {
                        v += t.component(k, a, b) * dual[a][p] * dual[b][q];
                    }
                }
                cart[slot][k] = v;
            }
        }
    }
    let grads = gradients(g, cart)?;
    let mut comps = Vec::with_capacity(n);
    for i in 0..g.n_theta() {
        let s = g.sin_theta()[i];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let (e, _) = bases(g, i, j);
            let c = frame.contorsion(k, s);
            let mut out = [T::zero(); 6];
            for d in 0..2 {
                for (jj, kk) in [(0, 0), (0, 1), (1, 1)] {
                    let mut v = T::zero();
                    for p in 0..3 {
                        for q in 0..3 {
                            let gr = &grads[cart_pair(p, q)];
                            let dm = if d == 0 { gr.theta[k] } else { gr.phi[k] };
                            v += dm * e[jj][p] * e[kk][q];
                        }
                    }
                    for l in 0..2 {
                        v -= c[l][d][jj] * t.component(k, l, kk) + c[l][d][kk] * t.component(k, jj, l);
                    }
                    out[3 * d + jj + kk] = v;
                }
            }
            comps.push(out);
        }
    }
    Tensor3Field::new(Arc::clone(g), comps)
}

/// Contracted second derivative `γ^{il} ∇_i S_ljk` of a (0,3) tensor that is
/// symmetric in its last two slots.
fn divergence_first_slot<T: Real>(frame: &ConformalFrame<T>, s3: &Tensor3Field<T>) -> Result<SymTensorField<T>> {
    let g = frame.grid();
    let n = g.len();
    // Cartesian M_pqr symmetric in (q, r): 3 × 6 components.
    let mut cart = vec![vec![T::zero(); n]; 18];
    for i in 0..g.n_theta() {
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let (_, dual) = bases(g, i, j);
            for p in 0..3 {
                for (slot, &(q, r)) in CART_PAIRS.iter().enumerate() {
                    let mut v = T::zero();
                    for a in 0..2 {
                        for b in 0..2 {
                            for c in 0..2 {
                                v += s3.get(k, a, b, c) * dual[a][p] * dual[b][q] * dual[c][r];
                            }
                        }
                    }
                    cart[6 * p + slot][k] = v;
                }
            }
        }
    }
    let grads = gradients(g, cart)?;
    let mut out = SymTensorField::zeros(g, MetricTag::Conformal);
    let w = frame.omega().values();
    for i in 0..g.n_theta() {
        let s = g.sin_theta()[i];
        let g0_inv = [T::one(), T::one() / (s * s)];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let (e, _) = bases(g, i, j);
            let c = frame.contorsion(k, s);
            let mut res = [T::zero(); 3];
            for (jj, kk) in [(0, 0), (0, 1), (1, 1)] {
                let mut acc = T::zero();
                for d in 0..2 {
                    // ∇_d S_{d jj kk}
                    let mut v = T::zero();
                    for p in 0..3 {
                        for q in 0..3 {
                            for r in 0..3 {
                                let gr = &grads[6 * p + cart_pair(q, r)];
                                let dm = if d == 0 { gr.theta[k] } else { gr.phi[k] };
                                v += dm * e[d][p] * e[jj][q] * e[kk][r];
                            }
                        }
                    }
                    for l in 0..2 {
                        v -= c[l][d][d] * s3.get(k, l, jj, kk)
                            + c[l][d][jj] * s3.get(k, d, l, kk)
                            + c[l][d][kk] * s3.get(k, d, jj, l);
                    }
                    acc += g0_inv[d] * v;
                }
                res[jj + kk] = acc / (w[k] * w[k]);
            }
            out.tt[k] = res[0];
            out.tp[k] = res[1];
            out.pp[k] = res[2];
        }
    }
    Ok(out)
}

/// Rough Laplacian `Δ_γ T = γ^{kl} ∇_k ∇_l T` of a symmetric (0,2) tensor,
/// by composing two covariant derivatives.
pub fn rough_laplacian_sym2<T: Real>(omega: &ScalarField<T>, t: &SymTensorField<T>) -> Result<SymTensorField<T>> {
    let frame = ConformalFrame::new(omega)?;
    rough_laplacian_with(&frame, t)
}

pub fn rough_laplacian_with<T: Real>(frame: &ConformalFrame<T>, t: &SymTensorField<T>) -> Result<SymTensorField<T>> {
    let first = grad_sym2_with(frame, t)?;
    divergence_first_slot(frame, &first)
}

/// Something whose `γ`-norm can be taken.
pub enum NormArg<'a, T> {
    Sym2(&'a SymTensorField<T>),
    Tensor3(&'a Tensor3Field<T>),
    OneForm(&'a VectorFieldSph<T>),
}

/// Pointwise `|X|²_γ`, full contraction with `γ⁻¹ = ω⁻² g₀⁻¹`.
pub fn gamma_norm2<T: Real>(omega: &ScalarField<T>, x: NormArg<'_, T>) -> Result<ScalarField<T>> {
    check_positive(omega)?;
    let w = omega.values();
    let (base, power) = match x {
        NormArg::Sym2(t) => (t.round_norm2(), 4),
        NormArg::OneForm(v) => (v.round_norm2(), 2),
        NormArg::Tensor3(s) => (tensor3_round_norm2(s), 6),
    };
    Ok(ScalarField::from_vec_unchecked(
        Arc::clone(omega.grid()),
        base.values().iter().zip(w).map(|(&b, &w)| b / w.powi(power)).collect(),
    ))
}

fn tensor3_round_norm2<T: Real>(s3: &Tensor3Field<T>) -> ScalarField<T> {
    let g = s3.grid();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_theta() {
        let s2 = g.sin_theta()[i] * g.sin_theta()[i];
        let inv = [T::one(), T::one() / s2];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let mut v = T::zero();
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let x = s3.get(k, a, b, c);
                        v += x * x * inv[a] * inv[b] * inv[c];
                    }
                }
            }
            out.push(v);
        }
    }
    ScalarField::from_vec_unchecked(Arc::clone(g), out)
}

/// `tr_γ T = ω⁻² g₀^{ij} T_ij`.
pub fn gamma_trace<T: Real>(omega: &ScalarField<T>, t: &SymTensorField<T>) -> ScalarField<T> {
    let tr = t.round_trace();
    tr.zip_map(omega, |a, w| a / (w * w)).expect("same grid")
}

/// `⟨S, T⟩_γ` for symmetric 2-tensors.
pub fn gamma_inner_sym2<T: Real>(omega: &ScalarField<T>, s: &SymTensorField<T>, t: &SymTensorField<T>) -> ScalarField<T> {
    let g = omega.grid();
    let w = omega.values();
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_theta() {
        let s2 = g.sin_theta()[i] * g.sin_theta()[i];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let v = s.tt[k] * t.tt[k] + two * s.tp[k] * t.tp[k] / s2 + s.pp[k] * t.pp[k] / (s2 * s2);
            out.push(v / w[k].powi(4));
        }
    }
    ScalarField::from_vec_unchecked(Arc::clone(g), out)
}

/// Trace-free part `T − ½ (tr_γ T) γ`; in two dimensions this does not
/// depend on the conformal factor.
pub fn trace_free<T: Real>(t: &SymTensorField<T>) -> SymTensorField<T> {
    t.round_trace_free()
}
