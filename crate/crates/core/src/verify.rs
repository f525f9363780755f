//! Residual checks for the geometric identities and flow estimates.
//!
//! Every check returns a [`ResidualReport`]; reports are plain `f64` so they
//! serialize the same way whatever scalar type the fields use. Relative
//! residuals are taken against `max(scale, 1)`, which keeps the trivially
//! vanishing cases (constant `ω`, steady states) on an absolute footing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conformal::{
    conformal_scalar_ops, gamma_norm2, grad_sym2_with, rough_laplacian_with, scalar_ops_with, ConformalFrame, NormArg,
};
use crate::error::{invalid, Error, Result};
use crate::flow::{FlowMode, TrajectoryLog};
use crate::lightcone::{
    intrinsic_scalar_curvature, lightcone_quantities, quantities_with, ConformalFactor, LightconeQuantities, Workspace,
};
use crate::scalar::Real;
use crate::spectral::{gradient0, laplacian0, RoundDerivatives, ScalarField};
use crate::tensor::SymTensorField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub max_residual: f64,
    /// Size of the dominant term.
    pub scale: f64,
    pub bandlimit: usize,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default)]
    pub details: BTreeMap<String, f64>,
}

impl ResidualReport {
    fn new(name: &str, max_residual: f64, scale: f64, bandlimit: usize, tolerance: f64) -> Self {
        let max_residual = max_residual.max(0.0);
        Self {
            name: name.to_string(),
            max_residual,
            scale,
            bandlimit,
            tolerance,
            pass: max_residual <= tolerance * scale.max(1.0),
            details: BTreeMap::new(),
        }
    }

    pub fn relative(&self) -> f64 {
        self.max_residual / self.scale.max(1.0)
    }

    fn detail(mut self, key: impl Into<String>, v: f64) -> Self {
        self.details.insert(key.into(), v);
        self
    }

    /// One line for logs and the acceptance printout.
    pub fn summary(&self) -> String {
        format!(
            "{} {}: residual {:.3e} (scale {:.3e}, tol {:.1e}, L = {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.max_residual,
            self.scale,
            self.tolerance,
            self.bandlimit
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub codazzi: f64,
    pub simons: f64,
    pub gradient_inequality: f64,
    pub variation: f64,
    pub variation_order: f64,
    pub evolution: f64,
    /// Allowed increase of a monotone quantity, per step or per unit time.
    pub monotonicity: f64,
    pub decay_r2: f64,
    pub gradient_estimate_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            codazzi: 1e-8,
            simons: 1e-5,
            gradient_inequality: 1e-8,
            variation: 1e-5,
            variation_order: 1.9,
            evolution: 1e-6,
            monotonicity: 1e-8,
            decay_r2: 0.99,
            gradient_estimate_slack: 2.0,
        }
    }
}

fn f<T: Real>(x: T) -> f64 {
    x.as_f64()
}

/// Pointwise `γ`-norm² of a 3-tensor antisymmetric in its first two slots,
/// given by its `D_θφk` components.
fn antisym_norm2<T: Real>(omega: &ScalarField<T>, d: &[[T; 2]]) -> Vec<T> {
    let g = omega.grid();
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_theta() {
        let s2 = g.sin_theta()[i] * g.sin_theta()[i];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let w2 = omega.values()[k] * omega.values()[k];
            let base = T::one() / (w2 * w2 * s2);
            out.push(two * base * (d[k][0] * d[k][0] + d[k][1] * d[k][1] / s2) / w2);
        }
    }
    out
}

fn max_sqrt<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.max(T::zero()).sqrt()))
}

/// Codazzi equations: `∇A` is totally symmetric, and
/// `∇_iχ_jk − ∇_jχ_ik = ζ_jχ_ik − ζ_iχ_jk`.
pub fn check_codazzi<T: Real>(omega: &ConformalFactor<T>, tol: &Tolerances) -> Result<ResidualReport> {
    let ws = Workspace::new(omega)?;
    let q = quantities_with(omega, &ws);
    let w = omega.field();
    let da = grad_sym2_with(&ws.frame, &q.a)?;
    let dchi = grad_sym2_with(&ws.frame, &q.chi)?;
    let n = w.grid().len();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for k in 0..n {
        d1.push([0, 1].map(|c| da.get(k, 0, 1, c) - da.get(k, 1, 0, c)));
        let z = [q.zeta.theta[k], q.zeta.phi[k]];
        d2.push([0, 1].map(|c| {
            dchi.get(k, 0, 1, c) - dchi.get(k, 1, 0, c) - z[1] * q.chi.component(k, 0, c) + z[0] * q.chi.component(k, 1, c)
        }));
    }
    let r1 = f(max_sqrt(&antisym_norm2(w, &d1)));
    let r2 = f(max_sqrt(&antisym_norm2(w, &d2)));
    let s1 = f(max_sqrt(gamma_norm2(w, NormArg::Tensor3(&da))?.values()));
    let s2 = f(max_sqrt(gamma_norm2(w, NormArg::Tensor3(&dchi))?.values()));
    Ok(
        ResidualReport::new("codazzi", r1.max(r2), s1.max(s2), w.grid().bandlimit(), tol.codazzi)
            .detail("residual_a", r1)
            .detail("residual_chi", r2)
            .detail("scale_a", s1)
            .detail("scale_chi", s2),
    )
}

/// Null Simons identity `ΔA = Hess H² + ½ H² Å`.
pub fn check_simons<T: Real>(omega: &ConformalFactor<T>, tol: &Tolerances) -> Result<ResidualReport> {
    let ws = Workspace::new(omega)?;
    let q = quantities_with(omega, &ws);
    let w = omega.field();
    let lap_a = rough_laplacian_with(&ws.frame, &q.a)?;
    let hess = conformal_scalar_ops(w, &q.h2)?.hessian;
    let half_h2 = q.h2.map(|h| h * T::lit(0.5));
    let res = lap_a.sub(&hess)?.sub(&q.a_ring.scale_by(&half_h2))?;
    let r = f(max_sqrt(gamma_norm2(w, NormArg::Sym2(&res))?.values()));
    let sa = gamma_norm2(w, NormArg::Sym2(&lap_a))?;
    let sh = gamma_norm2(w, NormArg::Sym2(&hess))?;
    let scale = sa
        .values()
        .iter()
        .zip(sh.values())
        .fold(T::zero(), |m, (&a, &b)| m.max(a.sqrt() + b.sqrt()));
    Ok(ResidualReport::new("simons", r, f(scale), w.grid().bandlimit(), tol.simons))
}

/// `|∇A|² ≥ ¾ |∇H²|²`; the residual is the worst violation.
pub fn check_gradient_inequality<T: Real>(omega: &ConformalFactor<T>, tol: &Tolerances) -> Result<ResidualReport> {
    let ws = Workspace::new(omega)?;
    let q = quantities_with(omega, &ws);
    let w = omega.field();
    let ga = gamma_norm2(w, NormArg::Tensor3(&grad_sym2_with(&ws.frame, &q.a)?))?;
    let gh = gamma_norm2(w, NormArg::OneForm(&gradient0(&q.h2)?))?;
    let slack = ga
        .values()
        .iter()
        .zip(gh.values())
        .map(|(&a, &h)| a - T::lit(0.75) * h)
        .fold(T::infinity(), T::min);
    let mut rep = ResidualReport::new("gradient_inequality", -f(slack), 1.0, w.grid().bandlimit(), tol.gradient_inequality);
    rep.scale = f(ga.max());
    rep.pass = f(slack) >= -tol.gradient_inequality;
    Ok(rep.detail("min_slack", f(slack)))
}

struct Probe<T> {
    gamma: SymTensorField<T>,
    theta_bar: ScalarField<T>,
    theta: ScalarField<T>,
    a: SymTensorField<T>,
    h2: ScalarField<T>,
}

impl<T: Real> From<LightconeQuantities<T>> for Probe<T> {
    fn from(q: LightconeQuantities<T>) -> Self {
        Self {
            gamma: q.gamma,
            theta_bar: q.theta_bar,
            theta: q.theta,
            a: q.a,
            h2: q.h2,
        }
    }
}

fn probe<T: Real>(omega: &ScalarField<T>, phi: &ScalarField<T>, eps: T) -> Result<Probe<T>> {
    let w = omega.zip_map(phi, |w, p| w + eps * p)?;
    let w = ConformalFactor::new(w).map_err(|_| invalid("epsilon", "probe ω ± εφ is not positive"))?;
    Ok(lightcone_quantities(&w)?.into())
}

/// Errors of the central difference quotients at step `eps` against the
/// analytic variations, for `γ, θ̲, θ, A, H²` in that order.
fn variation_errors<T: Real>(
    omega: &ScalarField<T>,
    phi: &ScalarField<T>,
    eps: T,
    exact: &Probe<T>,
) -> Result<[f64; 5]> {
    let p = probe(omega, phi, eps)?;
    let m = probe(omega, phi, -eps)?;
    let inv = T::one() / (T::lit(2.0) * eps);
    let sym = |a: &SymTensorField<T>, b: &SymTensorField<T>, e: &SymTensorField<T>| -> Result<f64> {
        let d = a.sub(b)?.scale(inv).sub(e)?;
        Ok(f(max_sqrt(gamma_norm2(omega, NormArg::Sym2(&d))?.values())))
    };
    let scal = |a: &ScalarField<T>, b: &ScalarField<T>, e: &ScalarField<T>| -> Result<f64> {
        Ok(f(a.zip_map(b, |x, y| (x - y) * inv)?.max_abs_diff(e)?))
    };
    Ok([
        sym(&p.gamma, &m.gamma, &exact.gamma)?,
        scal(&p.theta_bar, &m.theta_bar, &exact.theta_bar)?,
        scal(&p.theta, &m.theta, &exact.theta)?,
        sym(&p.a, &m.a, &exact.a)?,
        scal(&p.h2, &m.h2, &exact.h2)?,
    ])
}

/// Analytic first variations along `φ L̲`.
fn analytic_variation<T: Real>(omega: &ConformalFactor<T>, phi: &ScalarField<T>) -> Result<Probe<T>> {
    let w = omega.field();
    w.check_same_grid(phi)?;
    let q = lightcone_quantities(omega)?;
    let (two, half) = (T::lit(2.0), T::lit(0.5));
    // dγ = 2φχ̲, dθ̲ = −φ|χ̲|² with |χ̲|² = 2/ω².
    let gamma = q.chi_bar.scale_by(&phi.scale(two));
    let theta_bar = phi.zip_map(w, |p, w| -two * p / (w * w))?;

    let frame = ConformalFrame::new(w)?;
    let ops_phi = conformal_scalar_ops(w, phi)?;
    let dphi = gradient0(phi)?;
    let div_zeta = laplacian0(&w.map(|w| w.ln()))?.zip_map(w, |l, w| -l / (w * w))?;
    let zeta2 = gamma_norm2(w, NormArg::OneForm(&q.zeta))?;
    let g = w.grid();
    let four = T::lit(4.0);
    // Trace of the χ variation minus 2φ⟨χ, χ̲⟩; ⟨χ, χ̲⟩ = ½H².
    let mut dtheta = Vec::with_capacity(g.len());
    for i in 0..g.n_theta() {
        let s2 = g.sin_theta()[i] * g.sin_theta()[i];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let wk = w.values()[k];
            let inner = (dphi.theta[k] * q.zeta.theta[k] + dphi.phi[k] * q.zeta.phi[k] / s2) / (wk * wk);
            let pot = half * q.h2.values()[k] + two * div_zeta.values()[k] + two * zeta2.values()[k];
            dtheta.push(-two * ops_phi.laplacian.values()[k] - four * inner - phi.values()[k] * pot);
        }
    }
    let theta = ScalarField::new(g.clone(), dtheta)?;

    let tb_phi = q.theta_bar.zip_map(phi, |a, b| a * b)?;
    let d = RoundDerivatives::of(&tb_phi)?;
    let ops = scalar_ops_with(&frame, &d);
    let a = ops.hessian.scale(-two);
    let h2 = ops
        .laplacian
        .map(|l| -two * l)
        .zip_map(&tb_phi.zip_map(&q.h2, |t, h| t * h)?, |x, y| x - y)?;
    Ok(Probe {
        gamma,
        theta_bar,
        theta,
        a,
        h2,
    })
}

const VARIATION_NAMES: [&str; 5] = ["gamma", "theta_bar", "theta", "a", "h2"];

/// First variations of `γ, θ̲, θ, A, H²` along `φ L̲` by central differences at
/// `ε` and `2ε`. The residual is the worst relative error at `ε`; the order
/// `log₂(e(2ε)/e(ε))` must reach the configured minimum wherever the error
/// at `2ε` stands clear of round-off.
pub fn check_variation<T: Real>(
    omega: &ConformalFactor<T>,
    phi: &ScalarField<T>,
    eps: T,
    tol: &Tolerances,
) -> Result<ResidualReport> {
    if !(eps > T::zero()) {
        return Err(invalid("epsilon", "must be positive"));
    }
    let w = omega.field();
    let exact = analytic_variation(omega, phi)?;
    let e1 = variation_errors(w, phi, eps, &exact)?;
    let e2 = variation_errors(w, phi, eps * T::lit(2.0), &exact)?;
    let scales = [
        f(max_sqrt(gamma_norm2(w, NormArg::Sym2(&exact.gamma))?.values())),
        f(exact.theta_bar.max_abs()),
        f(exact.theta.max_abs()),
        f(max_sqrt(gamma_norm2(w, NormArg::Sym2(&exact.a))?.values())),
        f(exact.h2.max_abs()),
    ];
    // Round-off in a difference quotient of spectrally differentiated data.
    let l = w.grid().bandlimit() as f64;
    let noise = |s: f64| 100.0 * f(T::epsilon()) * l * l * s.max(1.0) / f(eps);
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    let mut order_ok = true;
    let mut details = BTreeMap::new();
    for q in 0..5 {
        let rel = e1[q] / scales[q].max(1.0);
        if rel >= worst_rel {
            worst_rel = rel;
            worst_abs = e1[q];
            worst_scale = scales[q];
        }
        details.insert(format!("{}_error", VARIATION_NAMES[q]), e1[q]);
        if e2[q] > 10.0 * noise(scales[q]) {
            let order = (e2[q] / e1[q]).log2();
            details.insert(format!("{}_order", VARIATION_NAMES[q]), order);
            order_ok &= order >= tol.variation_order;
        }
    }
    let mut rep = ResidualReport::new("variation", worst_abs, worst_scale, w.grid().bandlimit(), tol.variation);
    rep.pass = worst_rel <= tol.variation && order_ok;
    rep.details = details;
    Ok(rep.detail("epsilon", f(eps)))
}

fn uniform_stride<T: Real>(traj: &TrajectoryLog<T>, min_count: usize) -> Result<f64> {
    let s = &traj.snapshots;
    if s.len() < min_count {
        return Err(Error::Insufficient(format!(
            "need at least {min_count} snapshots, have {}",
            s.len()
        )));
    }
    let h = f(s[1].t - s[0].t);
    for p in s.windows(2) {
        if (f(p[1].t - p[0].t) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::Insufficient("snapshots are not uniformly spaced".into()));
        }
    }
    Ok(h)
}

fn require_mode<T: Real>(traj: &TrajectoryLog<T>, mode: FlowMode, what: &str) -> Result<()> {
    if traj.meta.options.mode != mode {
        return Err(Error::Insufficient(format!("{what} needs a {mode:?} trajectory")));
    }
    Ok(())
}

/// `|A|²` and its evolution right side `Δ|A|² − 2|∇A|² + ½(H²)³`, plus `H²`
/// and `ΔH² + ½(H²)²`.
fn evolution_fields<T: Real>(omega: &ConformalFactor<T>) -> Result<[ScalarField<T>; 4]> {
    let ws = Workspace::new(omega)?;
    let q = quantities_with(omega, &ws);
    let w = omega.field();
    let half = T::lit(0.5);
    let a2 = gamma_norm2(w, NormArg::Sym2(&q.a))?;
    let ga = gamma_norm2(w, NormArg::Tensor3(&grad_sym2_with(&ws.frame, &q.a)?))?;
    let lap_a2 = conformal_scalar_ops(w, &a2)?.laplacian;
    let lap_h2 = conformal_scalar_ops(w, &q.h2)?.laplacian;
    let rhs_h2 = lap_h2.zip_map(&q.h2, |l, h| l + half * h * h)?;
    let cubic = q.h2.map(|h| half * h * h * h);
    let rhs_a2 = lap_a2
        .zip_map(&ga, |l, g| l - T::lit(2.0) * g)?
        .zip_map(&cubic, |x, c| x + c)?;
    Ok([q.h2, rhs_h2, a2, rhs_a2])
}

/// Evolution of `H²` and `|A|²` along an unnormalized trajectory, audited
/// with five-point centered differences over the snapshots, together with
/// the record-by-record growth of `max |A|²/(H²)²`.
pub fn check_evolution<T: Real>(traj: &TrajectoryLog<T>, tol: &Tolerances) -> Result<ResidualReport> {
    require_mode(traj, FlowMode::Unnormalized, "check_evolution")?;
    let h = uniform_stride(traj, 5)?;
    let fields = traj
        .snapshots
        .iter()
        .map(|s| evolution_fields(&ConformalFactor::new(s.omega.clone())?))
        .collect::<Result<Vec<_>>>()?;
    for p in fields.windows(2) {
        let jump = f(p[1][0].max_abs_diff(&p[0][0])?) / f(p[0][0].max_abs());
        if jump > 0.1 {
            return Err(Error::Insufficient(format!("snapshot stride too coarse (H² jumps by {jump:.2})")));
        }
    }
    let c = [T::one(), T::lit(-8.0), T::zero(), T::lit(8.0), -T::one()];
    let denom = T::lit(12.0 * h);
    let (mut worst, mut worst_scale, mut worst_rel) = (0.0f64, 0.0f64, 0.0f64);
    let mut per_field = [0.0f64; 2];
    for k in 2..fields.len() - 2 {
        for (slot, (val, rhs)) in [(0, 1), (2, 3)].into_iter().enumerate() {
            let mut fd = fields[k][val].scale(T::zero());
            for (o, &ck) in c.iter().enumerate() {
                fd = fd.zip_map(&fields[k + o - 2][val], |a, b| a + ck * b / denom)?;
            }
            let e = f(fd.max_abs_diff(&fields[k][rhs])?);
            let s = f(fields[k][rhs].max_abs());
            let rel = e / s.max(f64::MIN_POSITIVE);
            per_field[slot] = per_field[slot].max(rel);
            if rel >= worst_rel {
                (worst, worst_scale, worst_rel) = (e, s, rel);
            }
        }
    }
    let ratio: Vec<f64> = traj.records.iter().filter_map(|r| r.a_ratio_max.map(f)).collect();
    let growth = ratio.windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let mut rep = ResidualReport::new("evolution", worst, worst_scale, traj.grid().bandlimit(), tol.evolution);
    rep.pass = worst_rel <= tol.evolution && growth <= tol.monotonicity && ratio.len() == traj.records.len();
    Ok(rep
        .detail("relative_h2", per_field[0])
        .detail("relative_a2", per_field[1])
        .detail("a_ratio_growth", growth)
        .detail("stride", h))
}

/// Least-squares line through `(x, y)`: slope and coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

const DEGENERATE: f64 = 1e-9;

/// Along a normalized trajectory: `max f_σ` never grows (beyond the
/// monotonicity tolerance per unit time), and the transverse quantities
/// decay exponentially after the first third of the run. The first three
/// decay fits must also reach the configured `R²`.
pub fn check_monotonicity_decay<T: Real>(
    traj: &TrajectoryLog<T>,
    sigmas: &[T],
    tol: &Tolerances,
) -> Result<ResidualReport> {
    require_mode(traj, FlowMode::Normalized, "check_monotonicity_decay")?;
    let recs = &traj.records;
    let l = traj.grid().bandlimit();
    let mut details = BTreeMap::new();

    let mut growth: f64 = 0.0;
    let mut defined = true;
    for &s in sigmas {
        let vals: Vec<Option<f64>> = recs.iter().map(|r| r.f_sigma_for(s).map(f)).collect();
        if vals.iter().any(Option::is_none) {
            defined = false;
            continue;
        }
        let v: Vec<f64> = vals.into_iter().flatten().collect();
        let mut g: f64 = 0.0;
        for (k, p) in v.windows(2).enumerate() {
            let dt = f(recs[k + 1].t - recs[k].t);
            g = g.max(p[1] - p[0] - tol.monotonicity * dt);
        }
        g = g.max(v.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)) - v[0] - tol.monotonicity);
        details.insert(format!("f_sigma_{}_growth", f(s)), g.max(0.0));
        growth = growth.max(g);
    }

    type Getter<T> = fn(&crate::flow::DiagnosticsRecord<T>) -> T;
    let monitored: [(&str, Getter<T>, bool); 5] = [
        ("a_ring_sq", |r| r.a_ring_sq_max, true),
        ("grad_h2_sq", |r| r.grad_h2_sq_max, true),
        ("h2_osc", |r| r.h2_oscillation(), true),
        ("h2_sobolev_2", |r| r.h2_sobolev[0], false),
        ("h2_sobolev_3", |r| r.h2_sobolev[1], false),
    ];
    let degenerate = recs
        .iter()
        .all(|r| monitored.iter().take(3).all(|(_, get, _)| f(get(r)).abs() < DEGENERATE));
    let mut decay_ok = true;
    let mut worst_r2: f64 = 1.0;
    if degenerate {
        details.insert("degenerate".into(), 1.0);
    } else {
        let t_end = f(recs.last().expect("records").t);
        let tail: Vec<_> = recs.iter().filter(|r| f(r.t) >= t_end / 3.0).collect();
        if tail.len() < 20 {
            return Err(Error::Insufficient(format!(
                "only {} records past the transient, need 20",
                tail.len()
            )));
        }
        for (name, get, strict) in monitored {
            let (x, y): (Vec<f64>, Vec<f64>) = tail
                .iter()
                .map(|r| (f(r.t), f(get(r))))
                .filter(|&(_, v)| v > 0.0)
                .map(|(t, v)| (t, v.ln()))
                .unzip();
            if x.len() < 20 {
                decay_ok = false;
                continue;
            }
            let (slope, r2) = linear_fit(&x, &y);
            details.insert(format!("{name}_slope"), slope);
            details.insert(format!("{name}_r2"), r2);
            decay_ok &= slope < 0.0;
            if strict {
                decay_ok &= r2 > tol.decay_r2;
                worst_r2 = worst_r2.min(r2);
            }
        }
    }
    let mut rep = ResidualReport::new("monotonicity_decay", growth, 1.0, l, tol.monotonicity);
    rep.pass = defined && growth <= 0.0 && decay_ok;
    rep.details = details;
    Ok(rep.detail("worst_r2", worst_r2))
}

/// `max_x (|∇R|_γ − η² R^{3/2})` at one time.
fn gradient_excess<T: Real>(r: &ScalarField<T>, omega: &ScalarField<T>, eta: f64) -> Result<f64> {
    let gr = gamma_norm2(omega, NormArg::OneForm(&gradient0(r)?))?;
    Ok(r.values()
        .iter()
        .zip(gr.values())
        .map(|(&r, &g)| f(g).sqrt() - eta * eta * f(r).max(0.0).powf(1.5))
        .fold(f64::NEG_INFINITY, f64::max))
}

pub const GRADIENT_ETAS: [f64; 2] = [0.5, 0.25];
const G_EPSILON: f64 = 0.125;

/// Gradient estimate `|∇R| ≤ η² R^{3/2} + C_η` along an unnormalized
/// trajectory: the excess over `η² R^{3/2}` must stay below its early-time
/// maximum `m` relaxed to `m + (slack − 1)|m|`. Also monitors
/// `G_ε = 2C_ε + (ε + ½)(H²)² − |A|²` with `C_ε` fixed from the first snapshot.
pub fn check_gradient_estimate<T: Real>(traj: &TrajectoryLog<T>, tol: &Tolerances) -> Result<ResidualReport> {
    require_mode(traj, FlowMode::Unnormalized, "check_gradient_estimate")?;
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::Insufficient(format!("need at least 3 snapshots, have {}", snaps.len())));
    }
    let (t0, t1) = (f(snaps[0].t), f(snaps[snaps.len() - 1].t));
    let early_until = t0 + (t1 - t0) / 4.0;
    let mut excess = vec![Vec::new(); GRADIENT_ETAS.len()];
    let mut g_min = f64::INFINITY;
    let mut c_eps = None;
    for s in snaps {
        let w = ConformalFactor::new(s.omega.clone())?;
        let r = intrinsic_scalar_curvature(&w)?;
        for (e, &eta) in excess.iter_mut().zip(&GRADIENT_ETAS) {
            e.push((f(s.t), gradient_excess(&r, w.field(), eta)?));
        }
        let q = lightcone_quantities(&w)?;
        let a2 = gamma_norm2(w.field(), NormArg::Sym2(&q.a))?;
        let pts: Vec<(f64, f64)> = q.h2.values().iter().zip(a2.values()).map(|(&h, &a)| (f(h), f(a))).collect();
        let c = *c_eps.get_or_insert_with(|| {
            let worst = pts
                .iter()
                .map(|&(h, a)| a - (G_EPSILON + 0.5) * h * h)
                .fold(f64::NEG_INFINITY, f64::max);
            let hmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            worst.max(0.0) + G_EPSILON * hmin * hmin
        });
        let g = pts
            .iter()
            .map(|&(h, a)| 2.0 * c + (G_EPSILON + 0.5) * h * h - a)
            .fold(f64::INFINITY, f64::min);
        g_min = g_min.min(g / c);
    }
    let c_eps = c_eps.expect("snapshots");
    let mut details = BTreeMap::new();
    let mut worst_over: f64 = f64::NEG_INFINITY;
    let mut scale: f64 = 0.0;
    for (e, eta) in excess.iter().zip(GRADIENT_ETAS) {
        let early = e.iter().filter(|p| p.0 <= early_until).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let sup = e.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let bound = early + (tol.gradient_estimate_slack - 1.0) * early.abs();
        details.insert(format!("eta_{eta}_early"), early);
        details.insert(format!("eta_{eta}_sup"), sup);
        worst_over = worst_over.max(sup - bound);
        scale = scale.max(early.abs());
    }
    details.insert("c_epsilon".into(), c_eps);
    details.insert("g_epsilon_min_over_c".into(), g_min);
    let mut rep = ResidualReport::new("gradient_estimate", worst_over, scale, traj.grid().bandlimit(), 0.0);
    rep.pass = worst_over <= 1e-12 * scale.max(1.0) && g_min > 0.0;
    rep.details = details;
    Ok(rep)
}

/// Pointwise identities on a single cross section, the ones `verify` runs.
pub fn identity_suite<T: Real>(
    omega: &ConformalFactor<T>,
    phi: &ScalarField<T>,
    eps: T,
    tol: &Tolerances,
) -> Result<Vec<ResidualReport>> {
    Ok(vec![
        check_codazzi(omega, tol)?,
        check_simons(omega, tol)?,
        check_gradient_inequality(omega, tol)?,
        check_variation(omega, phi, eps, tol)?,
    ])
}
