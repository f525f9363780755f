//! Null mean curvature flow of cross sections, equivalently 2d Ricci flow
//! `∂_t γ = −2 Ric` in the conformal class of the round sphere, and its
//! volume-preserving normalization.

mod diagnostics;
mod init;
mod rk;

use std::sync::Arc;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{invalid, Error, Result};
use crate::lightcone::{intrinsic_scalar_curvature, quantities_with, ConformalFactor, Workspace};
use crate::scalar::Real;
use crate::spectral::{analyze, gradient_and_laplacian0, synthesize, ScalarField, SphereGrid};

pub use diagnostics::{diagnostics, sobolev_seminorm, DiagnosticsRecord};
pub use init::{random_initial, RandomInit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    Unnormalized,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCriterion {
    /// `min ω < eps_ext`.
    Extinction,
    /// `max |Å|² < eps_conv`.
    Convergence,
    TFinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Extinction,
    Convergence,
    TFinal,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions<T> {
    pub mode: FlowMode,
    pub rk_tolerance: T,
    pub dt_initial: T,
    pub dt_min: T,
    pub dt_max: T,
    pub stop: StopCriterion,
    pub eps_ext: T,
    pub eps_conv: T,
    /// Hard cap on flow time for every stop criterion.
    pub t_final: T,
    /// Snapshot spacing in flow time; zero disables snapshots.
    pub snapshot_every: T,
    pub sigmas: Vec<T>,
    pub k0: T,
    pub max_steps: usize,
    /// Diagnostics are recorded every `record_stride` accepted steps, at
    /// every snapshot and at the stop.
    pub record_stride: usize,
    pub seed: Option<u64>,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            mode: FlowMode::Unnormalized,
            rk_tolerance: T::lit(1e-8),
            dt_initial: T::lit(1e-4),
            dt_min: T::lit(1e-14),
            dt_max: T::lit(0.05),
            stop: StopCriterion::Extinction,
            eps_ext: T::lit(1e-3),
            eps_conv: T::lit(1e-9),
            t_final: T::infinity(),
            snapshot_every: T::zero(),
            sigmas: vec![T::zero(), T::lit(0.5), T::one()],
            k0: T::one(),
            max_steps: 1_000_000,
            record_stride: 1,
            seed: None,
        }
    }
}

impl<T: Real> FlowOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.rk_tolerance) {
            return Err(invalid("rk_tolerance", "must be positive"));
        }
        if !pos(self.dt_min) || !pos(self.dt_max) || !pos(self.dt_initial) {
            return Err(invalid("dt", "step bounds must be positive"));
        }
        if self.dt_min > self.dt_max {
            return Err(invalid("dt_min", "must not exceed dt_max"));
        }
        if !pos(self.eps_ext) || !pos(self.eps_conv) {
            return Err(invalid("eps", "stop thresholds must be positive"));
        }
        if !(self.t_final > T::zero()) {
            return Err(invalid("t_final", "must be positive"));
        }
        if !(self.snapshot_every >= T::zero()) {
            return Err(invalid("snapshot_every", "must be non-negative"));
        }
        if self.sigmas.iter().any(|&s| !(s >= T::zero() && s <= T::one())) {
            return Err(invalid("sigmas", "each sigma must lie in [0, 1]"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be at least 1"));
        }
        if self.stop == StopCriterion::TFinal && !self.t_final.is_finite() {
            return Err(invalid("t_final", "must be finite when it is the stop criterion"));
        }
        Ok(())
    }

    /// Equal step bounds select fixed steps without error control.
    pub fn fixed_step(&self) -> bool {
        self.dt_min == self.dt_max
    }
}

#[derive(Debug, Clone)]
pub struct FlowState<T> {
    pub t: T,
    pub omega: ConformalFactor<T>,
}

impl<T: Real> FlowState<T> {
    pub fn new(t: T, omega: ConformalFactor<T>) -> Result<Self> {
        if !(t >= T::zero()) {
            return Err(invalid("t", "must be non-negative"));
        }
        Ok(Self { t, omega })
    }
}

#[derive(Debug, Error)]
pub enum FlowError<T: Real> {
    #[error("step size fell below dt_min at t = {t}", t = .state.t)]
    StiffFailure { state: Box<FlowState<T>>, dt: T },

    #[error("conformal factor lost positivity at t = {t}")]
    Positivity { t: T },

    #[error(transparent)]
    Geometry(#[from] Error),
}

#[derive(Debug, Clone)]
pub struct Snapshot<T> {
    pub index: usize,
    pub t: T,
    pub omega: ScalarField<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata<T> {
    pub bandlimit: usize,
    pub oversample: String,
    pub n_theta: usize,
    pub n_phi: usize,
    pub options: FlowOptions<T>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub stop_reason: Option<StopReason>,
    /// `t + Vol/(8π)` at the stop, unnormalized runs only.
    pub extinction_estimate: Option<T>,
    /// `|Vol(t) − Vol(0)| / Vol(0)` per unit time, normalized runs only.
    pub volume_drift_rate: Option<T>,
    /// Initial data violated `R > 0`.
    pub nonpositive_curvature: bool,
    pub renormalized: bool,
}

#[derive(Debug, Clone)]
pub struct TrajectoryLog<T> {
    pub records: Vec<DiagnosticsRecord<T>>,
    pub snapshots: Vec<Snapshot<T>>,
    pub final_state: FlowState<T>,
    pub meta: RunMetadata<T>,
}

impl<T: Real> TrajectoryLog<T> {
    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        self.final_state.omega.grid()
    }

    pub fn last(&self) -> &DiagnosticsRecord<T> {
        self.records.last().expect("at least the initial record")
    }
}

/// Unnormalized right side in the intrinsic form
/// `ω⁻² Δ₀ω − 1/ω − ω⁻³ |∇ω|²₀`; normalized mode adds `rω/2`, `r = 8π/Vol`.
///
/// The result is projected onto degrees `≤ L`. Grid values carry more
/// freedom than the series, and on that extra part the pointwise terms act
/// as `+2δ` with nothing in the Laplacian to damp it.
pub fn rhs<T: Real>(omega: &ConformalFactor<T>, mode: FlowMode) -> Result<ScalarField<T>> {
    let w = omega.field();
    let (grad, lap) = gradient_and_laplacian0(w)?;
    let g = w.grid();
    let one = T::one();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_theta() {
        let s2 = g.sin_theta()[i] * g.sin_theta()[i];
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let wk = w.values()[k];
            let (wt, wp) = (grad.theta[k], grad.phi[k]);
            let grad2 = wt * wt + wp * wp / s2;
            out.push(lap.values()[k] / (wk * wk) - one / wk - grad2 / (wk * wk * wk));
        }
    }
    let mut out = ScalarField::new(Arc::clone(g), out)?;
    if mode == FlowMode::Normalized {
        let r = T::lit(8.0) * T::PI() / omega.volume();
        let half = T::lit(0.5);
        out = out.zip_map(w, |v, w| v + half * r * w)?;
    }
    synthesize(&analyze(&out), g)
}

/// `−θ/2`, the extrinsic form of the unnormalized right side.
pub fn rhs_expansion<T: Real>(omega: &ConformalFactor<T>) -> Result<ScalarField<T>> {
    let ws = Workspace::new(omega)?;
    Ok(quantities_with(omega, &ws).theta.scale(-T::lit(0.5)))
}

/// `−ωK` with the Gauss curvature taken from the intrinsic formula
/// `K = (1 − Δ₀ log ω)/ω²`.
pub fn rhs_curvature<T: Real>(omega: &ConformalFactor<T>) -> Result<ScalarField<T>> {
    let r = intrinsic_scalar_curvature(omega)?;
    let half = T::lit(0.5);
    r.zip_map(omega.field(), |r, w| -half * w * r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo<T> {
    pub dt_taken: T,
    pub rejections: usize,
}

/// Controller memory carried from one accepted step to the next.
#[derive(Debug, Clone)]
pub struct StepControl<T> {
    pub dt: T,
    /// Scaled error of the previous accepted step.
    pub err_prev: T,
    /// Right side at the current state (first-same-as-last reuse).
    pub(crate) k_first: Option<ScalarField<T>>,
}

impl<T: Real> StepControl<T> {
    pub fn new(dt: T) -> Self {
        Self {
            dt,
            err_prev: T::one(),
            k_first: None,
        }
    }
}

fn lincomb<T: Real>(base: &ScalarField<T>, ks: &[ScalarField<T>], coeffs: &[f64], dt: T) -> ScalarField<T> {
    let mut v = base.values().to_vec();
    for (k, &c) in ks.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        let c = T::lit(c) * dt;
        for (a, &b) in v.iter_mut().zip(k.values()) {
            *a += c * b;
        }
    }
    ScalarField::new(Arc::clone(base.grid()), v).expect("same shape")
}

enum Attempt<T> {
    Done { y: ScalarField<T>, err: T, k_last: ScalarField<T> },
    Unusable,
}

fn attempt<T: Real>(state: &FlowState<T>, k1: &ScalarField<T>, opts: &FlowOptions<T>, dt: T) -> Attempt<T> {
    let y = state.omega.field();
    let mut ks: Vec<ScalarField<T>> = Vec::with_capacity(7);
    ks.push(k1.clone());
    for s in 1..7 {
        let ys = lincomb(y, &ks, &rk::A[s][..s], dt);
        let Ok(ys) = ConformalFactor::new(ys) else {
            return Attempt::Unusable;
        };
        match rhs(&ys, opts.mode) {
            Ok(k) if k.is_finite() => ks.push(k),
            _ => return Attempt::Unusable,
        }
    }
    // The seventh stage is evaluated at the fifth-order solution itself.
    let y_new = lincomb(y, &ks, &rk::B, dt);
    let err_field = lincomb(&ScalarField::constant(y.grid(), T::zero()), &ks, &rk::E, dt);
    let err = err_field
        .values()
        .iter()
        .zip(y.values())
        .map(|(&e, &v)| e.abs() / (opts.rk_tolerance * (T::one() + v.abs())))
        .fold(T::zero(), T::max);
    if !y_new.is_finite() || !err.is_finite() {
        return Attempt::Unusable;
    }
    let k_last = ks.pop().expect("seven stages");
    Attempt::Done { y: y_new, err, k_last }
}

/// Largest step that keeps the top harmonic inside the real stability
/// interval of the method (about `[−3.3, 0]`); the diffusion coefficient is
/// `ω⁻²`, so that mode has rate `L(L+1)/min ω²`. Without the cap the
/// controller settles just past the boundary and lets round-off grow to the
/// tolerance level before it reacts.
fn stability_limit<T: Real>(omega: &ConformalFactor<T>) -> T {
    let l = T::from_usize_lossy(omega.grid().bandlimit());
    let w = omega.field().min();
    T::lit(3.0) * w * w / (l * (l + T::one()))
}

/// One accepted Dormand–Prince step. Step sizes follow a PI controller
/// (exponents 0.7/5 and 0.4/5); a step is rejected when the scaled error
/// exceeds one or when `min ω` would fall below `eps_ext / 2`.
pub fn step_adaptive<T: Real>(
    state: &FlowState<T>,
    opts: &FlowOptions<T>,
    control: Option<StepControl<T>>,
) -> Result<(FlowState<T>, StepInfo<T>, StepControl<T>), FlowError<T>> {
    let floor = opts.eps_ext * T::lit(0.5);
    let control = control.unwrap_or_else(|| StepControl::new(opts.dt_initial));
    let fixed = opts.fixed_step();
    let mut dt = control.dt.max(opts.dt_min).min(opts.dt_max);
    if !fixed {
        dt = dt.min(stability_limit(&state.omega).max(opts.dt_min));
    }
    let k1 = match control.k_first {
        Some(k) => k,
        None => rhs(&state.omega, opts.mode)?,
    };
    let mut rejections = 0;
    let (lo, hi) = (T::lit(0.2), T::lit(5.0));
    loop {
        let outcome = attempt(state, &k1, opts, dt);
        let retry = match outcome {
            Attempt::Done { y, err, k_last } if y.min() >= floor && (fixed || err <= T::one()) => {
                let omega = ConformalFactor::new(y).map_err(|_| FlowError::Positivity { t: state.t + dt })?;
                let err = err.max(T::lit(1e-10));
                let factor = T::lit(0.9) * err.powf(T::lit(-0.14)) * control.err_prev.powf(T::lit(0.08));
                let factor = factor.max(lo).min(if rejections > 0 { T::one() } else { hi });
                let next = if fixed {
                    dt
                } else {
                    (dt * factor).min(stability_limit(&omega)).max(opts.dt_min).min(opts.dt_max)
                };
                return Ok((
                    FlowState { t: state.t + dt, omega },
                    StepInfo { dt_taken: dt, rejections },
                    StepControl {
                        dt: next,
                        err_prev: err,
                        k_first: Some(k_last),
                    },
                ));
            }
            Attempt::Done { y, err, .. } if y.min() >= floor => (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1)).min(T::lit(0.5)),
            _ => T::lit(0.5),
        };
        rejections += 1;
        if fixed || dt <= opts.dt_min {
            return Err(FlowError::StiffFailure {
                state: Box::new(state.clone()),
                dt,
            });
        }
        dt = (dt * retry).max(opts.dt_min);
    }
}

fn record_for<T: Real>(state: &FlowState<T>, opts: &FlowOptions<T>) -> Result<DiagnosticsRecord<T>> {
    let mut r = diagnostics(&state.omega, &opts.sigmas, opts.k0)?;
    r.t = state.t;
    Ok(r)
}

/// Integrates from `omega0` until the configured stop, recording diagnostics
/// after every accepted step and snapshots at multiples of `snapshot_every`.
pub fn run_flow<T: Real>(omega0: &ConformalFactor<T>, opts: &FlowOptions<T>) -> Result<TrajectoryLog<T>, FlowError<T>> {
    opts.validate()?;
    let g = Arc::clone(omega0.grid());
    let mut state = FlowState::new(T::zero(), omega0.clone())?;
    let first = record_for(&state, opts)?;
    let nonpositive_curvature = !(first.r_min > T::zero());
    if nonpositive_curvature {
        warn!("initial scalar curvature is not positive (min R = {}); continuing", first.r_min);
    }
    let vol0 = first.vol;
    let mut records = vec![first];
    let snapping = opts.snapshot_every > T::zero();
    let mut snapshots = Vec::new();
    if snapping {
        snapshots.push(Snapshot {
            index: 0,
            t: T::zero(),
            omega: state.omega.field().clone(),
        });
    }
    let mut control = StepControl::new(opts.dt_initial);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut max_drift_rate = T::zero();

    let stop_reason = loop {
        if let Some(reason) = stop_check(&state, records.last().expect("nonempty"), opts) {
            break reason;
        }
        if accepted >= opts.max_steps {
            break StopReason::MaxSteps;
        }
        // Land exactly on the next snapshot time and on t_final.
        let next_snap = snapping.then(|| opts.snapshot_every * T::from_usize_lossy(snapshots.len()));
        let target = next_snap.map_or(opts.t_final, |s| s.min(opts.t_final));
        let remaining = target - state.t;
        let landing = remaining <= control.dt;
        let trial = if landing { remaining } else { control.dt };
        let local;
        let step_opts = if landing && trial < opts.dt_min {
            // The landing step may legitimately undercut dt_min.
            local = FlowOptions {
                dt_min: trial,
                dt_max: if opts.fixed_step() { trial } else { opts.dt_max },
                ..opts.clone()
            };
            &local
        } else {
            opts
        };
        let planned = control.dt;
        control.dt = trial;
        let (next, info, next_control) = step_adaptive(&state, step_opts, Some(control))?;
        control = next_control;
        accepted += 1;
        rejected += info.rejections;
        let hit_target = landing && info.dt_taken == trial;
        state = FlowState {
            t: if hit_target { target } else { next.t },
            omega: next.omega,
        };
        if opts.fixed_step() {
            control.dt = opts.dt_max;
        } else if hit_target {
            // A shortened landing step says nothing about the admissible size.
            control.dt = control.dt.max(planned);
        }
        let snap = hit_target && next_snap == Some(target);
        if snap {
            snapshots.push(Snapshot {
                index: snapshots.len(),
                t: state.t,
                omega: state.omega.field().clone(),
            });
        }
        let due = snap || accepted % opts.record_stride == 0 || state.t >= opts.t_final;
        if due {
            let rec = record_for(&state, opts)?;
            if opts.mode == FlowMode::Normalized && state.t > T::zero() {
                let rate = ((rec.vol - vol0) / vol0).abs() / state.t.max(T::one());
                max_drift_rate = max_drift_rate.max(rate);
            }
            records.push(rec);
        }
        debug!("t = {:e}, dt = {:e}, min omega = {:e}", state.t.as_f64(), info.dt_taken.as_f64(), state.omega.field().min().as_f64());
    };

    if records.last().expect("nonempty").t != state.t {
        records.push(record_for(&state, opts)?);
    }
    let last = records.last().expect("nonempty");
    let extinction_estimate = (opts.mode == FlowMode::Unnormalized).then(|| state.t + last.vol / (T::lit(8.0) * T::PI()));
    let volume_drift_rate = (opts.mode == FlowMode::Normalized).then_some(max_drift_rate);
    if let Some(d) = volume_drift_rate {
        if d > T::lit(1e-8) {
            warn!("normalized flow volume drift {:e} per unit time exceeds 1e-8", d.as_f64());
        }
    }
    let meta = RunMetadata {
        bandlimit: g.bandlimit(),
        oversample: g.oversample().to_string(),
        n_theta: g.n_theta(),
        n_phi: g.n_phi(),
        options: opts.clone(),
        accepted_steps: accepted,
        rejected_steps: rejected,
        stop_reason: Some(stop_reason),
        extinction_estimate,
        volume_drift_rate,
        nonpositive_curvature,
        renormalized: false,
    };
    Ok(TrajectoryLog {
        records,
        snapshots,
        final_state: state,
        meta,
    })
}

fn stop_check<T: Real>(state: &FlowState<T>, rec: &DiagnosticsRecord<T>, opts: &FlowOptions<T>) -> Option<StopReason> {
    match opts.stop {
        StopCriterion::Extinction if state.omega.field().min() < opts.eps_ext => return Some(StopReason::Extinction),
        StopCriterion::Convergence if rec.a_ring_sq_max < opts.eps_conv => return Some(StopReason::Convergence),
        _ => {}
    }
    (state.t >= opts.t_final).then_some(StopReason::TFinal)
}

/// Rescales an unnormalized trajectory by `c(t) = exp ∫₀ᵗ r dτ`,
/// `r = 8π/Vol`, and reparametrizes by `t̃ = ∫₀ᵗ c dτ`; `ω̃ = √c ω`.
///
/// Between consecutive records the volume is interpolated linearly and both
/// integrals are taken in closed form for that interpolant. The unnormalized
/// flow has `dVol/dt = −8π`, so the rule is exact up to the logged volumes.
pub fn renormalize_trajectory<T: Real>(traj: &TrajectoryLog<T>) -> Result<TrajectoryLog<T>> {
    if traj.meta.options.mode != FlowMode::Unnormalized {
        return Err(invalid("trajectory", "renormalization expects an unnormalized run"));
    }
    let recs = &traj.records;
    if recs.len() < 3 {
        return Err(Error::Insufficient(format!("{} records are too few to integrate r(t)", recs.len())));
    }
    let n = recs.len();
    let mut log_c = vec![T::zero(); n];
    let mut t_tilde = vec![T::zero(); n];
    for k in 1..n {
        let h = recs[k].t - recs[k - 1].t;
        let (dlog, dt_tilde) = interval_integrals(recs[k - 1].vol, recs[k].vol, h);
        log_c[k] = log_c[k - 1] + dlog;
        t_tilde[k] = t_tilde[k - 1] + log_c[k - 1].exp() * dt_tilde;
    }
    let records = recs
        .iter()
        .zip(log_c.iter().zip(&t_tilde))
        .map(|(r, (&lc, &tt))| diagnostics::rescale_record(r, lc.exp(), tt))
        .collect();
    let at = |t: T| -> Result<(T, T)> {
        let k = recs
            .iter()
            .position(|r| r.t == t)
            .ok_or_else(|| Error::Insufficient(format!("snapshot time {t} has no matching record")))?;
        Ok((log_c[k].exp(), t_tilde[k]))
    };
    let mut snapshots = Vec::with_capacity(traj.snapshots.len());
    for s in &traj.snapshots {
        let (c, tt) = at(s.t)?;
        let sc = c.sqrt();
        snapshots.push(Snapshot {
            index: s.index,
            t: tt,
            omega: s.omega.scale(sc),
        });
    }
    let (c_end, t_end) = (log_c[n - 1].exp(), t_tilde[n - 1]);
    let final_state = FlowState::new(t_end, ConformalFactor::new(traj.final_state.omega.field().scale(c_end.sqrt()))?)?;
    let mut meta = traj.meta.clone();
    meta.renormalized = true;
    meta.extinction_estimate = None;
    Ok(TrajectoryLog {
        records,
        snapshots,
        final_state,
        meta,
    })
}

/// `(∫ 8π/V, ∫ exp ∫ 8π/V)` over one interval of length `h` on which `V`
/// runs linearly from `va` to `vb`; the inner integral starts at the left end.
fn interval_integrals<T: Real>(va: T, vb: T, h: T) -> (T, T) {
    let eight_pi = T::lit(8.0) * T::PI();
    let dv = vb - va;
    if dv.abs() <= T::lit(1e-13) * va.abs() {
        let r = eight_pi / va;
        return (r * h, (r * h).exp_m1() / r);
    }
    let s = dv / h;
    let ln_ratio = (vb / va).ln();
    let p = eight_pi / s;
    // c(t)/c_a = (V/Va)^p, so ∫ c/c_a = Va/s · ((Vb/Va)^{p+1} − 1)/(p+1).
    let q = p + T::one();
    let x = q * ln_ratio;
    let factor = if x.abs() < T::lit(1e-12) { ln_ratio } else { x.exp_m1() / q };
    (p * ln_ratio, va / s * factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_rule_matches_quadrature() {
        let (va, vb, h) = (10.0f64, 9.0, 0.05);
        let n = 20000;
        let (mut lc, mut tt) = (0.0, 0.0);
        let step = h / n as f64;
        for i in 0..n {
            let t = (i as f64 + 0.5) * step;
            let v = va + (vb - va) * t / h;
            let r = 8.0 * std::f64::consts::PI / v;
            tt += step * (lc + 0.5 * r * step).exp();
            lc += r * step;
        }
        let (a, b) = interval_integrals(va, vb, h);
        assert!((a - lc).abs() < 1e-9);
        assert!((b - tt).abs() < 1e-9);
        let (a0, b0) = interval_integrals(4.0, 4.0, 0.1);
        assert!((a0 - 0.2 * std::f64::consts::PI).abs() < 1e-14);
        assert!((b0 - (a0.exp() - 1.0) / (2.0 * std::f64::consts::PI)).abs() < 1e-14);
    }
}
