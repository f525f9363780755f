use std::f64::consts::PI;
use std::sync::Arc;

use lcflow::flow::{
    diagnostics, random_initial, renormalize_trajectory, rhs, rhs_curvature, rhs_expansion, run_flow, step_adaptive,
    FlowMode, FlowOptions, FlowState, RandomInit, StopCriterion, StopReason,
};
use lcflow::lightcone::ConformalFactor;
use lcflow::spectral::{build_grid, harmonic, ScalarField, SphereGrid};
use lcflow::steady::{fit_constant_curvature, mobius_omega, SteadyStateParams};
use num_rational::Ratio;

fn grid(l: usize) -> Arc<SphereGrid<f64>> {
    build_grid(l, Ratio::from_integer(2)).unwrap()
}

fn tilted(g: &Arc<SphereGrid<f64>>) -> ConformalFactor<f64> {
    ConformalFactor::new(ScalarField::from_cartesian(g, |x| 1.0 + 0.1 * x[2])).unwrap()
}

#[test]
fn rhs_examples() {
    let g = grid(16);
    let one = ConformalFactor::constant(&g, 1.0).unwrap();
    let v = rhs(&one, FlowMode::Unnormalized).unwrap();
    assert!(v.values().iter().all(|x| (x + 1.0).abs() < 1e-11));

    let w = tilted(&g);
    let a = rhs(&w, FlowMode::Unnormalized).unwrap();
    assert!(a.max_abs_diff(&rhs_curvature(&w).unwrap()).unwrap() < 1e-9);
    assert!(a.max_abs_diff(&rhs_expansion(&w).unwrap()).unwrap() < 1e-9);

    let g = grid(24);
    let p = SteadyStateParams::new(1.3, [0.1, -0.2, 0.3]).unwrap();
    let m = mobius_omega(&p, &g).unwrap();
    assert!(rhs(&m, FlowMode::Normalized).unwrap().max_abs() < 1e-8);
}

#[test]
fn round_solution_closed_form() {
    let g = grid(16);
    let opts = FlowOptions {
        rk_tolerance: 1e-10,
        stop: StopCriterion::TFinal,
        t_final: 0.375,
        ..FlowOptions::default()
    };
    let traj = run_flow(&ConformalFactor::constant(&g, 1.0).unwrap(), &opts).unwrap();
    assert_eq!(traj.final_state.t, 0.375);
    let err = traj.final_state.omega.field().values().iter().map(|w| (w - 0.5).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err:e}");
    for r in &traj.records {
        let w = r.omega_max;
        assert!((w * w + 2.0 * r.t - 1.0).abs() < 1e-8);
    }
}

#[test]
fn round_extinction_time() {
    let g = grid(16);
    let eps = 1e-3;
    let opts = FlowOptions {
        rk_tolerance: 1e-10,
        eps_ext: eps,
        ..FlowOptions::default()
    };
    let traj = run_flow(&ConformalFactor::constant(&g, 1.0).unwrap(), &opts).unwrap();
    assert_eq!(traj.meta.stop_reason, Some(StopReason::Extinction));
    let t = traj.final_state.t;
    assert!((t - 0.5 * (1.0 - eps * eps)).abs() < 1e-6, "{t}");
    assert!((traj.meta.extinction_estimate.unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn one_step_is_consistent_with_rhs() {
    let g = grid(12);
    let w = tilted(&g);
    let f = rhs(&w, FlowMode::Unnormalized).unwrap();
    let state = FlowState::new(0.0, w.clone()).unwrap();
    let mut errs = Vec::new();
    for dt in [1e-4, 5e-5] {
        let opts = FlowOptions {
            dt_min: dt,
            dt_max: dt,
            dt_initial: dt,
            ..FlowOptions::default()
        };
        let (next, info, _) = step_adaptive(&state, &opts, None).unwrap();
        assert_eq!(info.dt_taken, dt);
        let quotient = next.omega.field().zip_map(w.field(), |a, b| (a - b) / dt).unwrap();
        errs.push(quotient.max_abs_diff(&f).unwrap());
    }
    // First-order consistency of the difference quotient.
    assert!(errs[1] < 0.6 * errs[0], "{errs:?}");
}

#[test]
fn fixed_step_global_order() {
    let g = grid(8);
    let one = ConformalFactor::constant(&g, 1.0).unwrap();
    let t_end = 0.3;
    let exact = (1.0f64 - 2.0 * t_end).sqrt();
    let err = |dt: f64| {
        let opts = FlowOptions {
            dt_min: dt,
            dt_max: dt,
            dt_initial: dt,
            stop: StopCriterion::TFinal,
            t_final: t_end,
            ..FlowOptions::default()
        };
        let traj = run_flow(&one, &opts).unwrap();
        (traj.final_state.omega.field().values()[0] - exact).abs()
    };
    let (e1, e2) = (err(0.03), err(0.015));
    let order = (e1 / e2).log2();
    assert!(order >= 4.0, "order {order} ({e1:e}, {e2:e})");
}

#[test]
fn mobius_flow_stays_in_family() {
    let g = grid(16);
    let p = SteadyStateParams::new(1.0, [0.0, 0.0, 0.3]).unwrap();
    let w0 = mobius_omega(&p, &g).unwrap();
    let opts = FlowOptions {
        rk_tolerance: 1e-10,
        eps_ext: 0.05,
        ..FlowOptions::default()
    };
    let traj = run_flow(&w0, &opts).unwrap();
    let wt = &traj.final_state.omega;
    let (fit, residual) = fit_constant_curvature(wt).unwrap();
    assert!(residual < 1e-7);
    // Homothety: ω(t) = √(1 − 2t/c²) ω₀ with R₀ = 2/c².
    let s = (1.0 - 2.0 * traj.final_state.t).sqrt();
    assert!(wt.field().max_abs_diff(&w0.field().scale(s)).unwrap() < 1e-7);
    assert!((fit.a[2] - 0.3).abs() < 1e-7);
}

#[test]
fn diagnostics_examples() {
    let g = grid(16);
    let r = diagnostics(&ConformalFactor::constant(&g, 2.0).unwrap(), &[0.0, 0.5, 1.0], 1.0).unwrap();
    assert!((r.h2_min - 1.0).abs() < 1e-11 && (r.h2_max - 1.0).abs() < 1e-11);
    assert!(r.a_ring_sq_max < 1e-20);
    assert!(r.f_sigma.iter().all(|(_, v)| v.unwrap() < 1e-20));
    assert!((r.vol - 16.0 * PI).abs() < 1e-11);

    let p = SteadyStateParams::new(1.0, [0.0, 0.4, 0.0]).unwrap();
    let r = diagnostics(&mobius_omega(&p, &g).unwrap(), &[0.0, 0.5, 1.0], 1.0).unwrap();
    assert!(r.f_sigma.iter().all(|(_, v)| v.unwrap() < 1e-9));

    let r = diagnostics(&tilted(&g), &[0.5], 1.0).unwrap();
    assert!(r.grad_ineq_slack >= -1e-9);
}

#[test]
fn h2_flag_when_not_positive() {
    let g = grid(16);
    let w = ConformalFactor::new(&harmonic(&g, 3, 0).scale(0.35) + &ScalarField::constant(&g, 1.0)).unwrap();
    let r = diagnostics(&w, &[0.5], 1.0).unwrap();
    assert!(r.h2_min <= 0.0);
    assert_eq!(r.f_sigma[0].1, None);
    assert_eq!(r.psi, None);
}

#[test]
fn renormalized_round_trajectory_is_fixed() {
    let g = grid(8);
    let opts = FlowOptions {
        rk_tolerance: 1e-10,
        stop: StopCriterion::TFinal,
        t_final: 0.4,
        snapshot_every: 0.1,
        ..FlowOptions::default()
    };
    let traj = run_flow(&ConformalFactor::constant(&g, 1.0).unwrap(), &opts).unwrap();
    assert_eq!(traj.snapshots.len(), 5);
    let ren = renormalize_trajectory(&traj).unwrap();
    assert_eq!(ren.records[0].t, 0.0);
    for s in &ren.snapshots {
        assert!(s.omega.values().iter().all(|w| (w - 1.0).abs() < 1e-8), "t = {}", s.t);
    }
    for r in &ren.records {
        assert!((r.vol - 4.0 * PI).abs() / (4.0 * PI) < 1e-6);
    }
}

#[test]
fn random_initial_is_seeded_and_admissible() {
    let g = grid(16);
    let spec = RandomInit::default();
    let a = random_initial(&g, &spec, 7).unwrap();
    let b = random_initial(&g, &spec, 7).unwrap();
    let c = random_initial(&g, &spec, 8).unwrap();
    assert_eq!(a.field().values(), b.field().values());
    assert_ne!(a.field().values(), c.field().values());
    assert!(diagnostics(&a, &[], 1.0).unwrap().r_min > 0.0);
}

#[test]
fn options_are_validated() {
    let g = grid(8);
    let one = ConformalFactor::constant(&g, 1.0).unwrap();
    let bad = FlowOptions {
        dt_min: 1.0,
        dt_max: 0.1,
        ..FlowOptions::<f64>::default()
    };
    assert!(run_flow(&one, &bad).is_err());
    let bad = FlowOptions {
        sigmas: vec![1.5],
        ..FlowOptions::<f64>::default()
    };
    assert!(run_flow(&one, &bad).is_err());
}

#[test]
fn long_normalized_run_of_steady_state_does_not_drift() {
    // Grid values outside the series would grow like e^{2t} if the right
    // side were not projected; over t = 8 that is a factor of 10⁷.
    let g = grid(16);
    let p = SteadyStateParams::new(1.0, [0.0, 0.3, 0.0]).unwrap();
    let w = mobius_omega(&p, &g).unwrap();
    let opts = FlowOptions {
        mode: FlowMode::Normalized,
        rk_tolerance: 1e-10,
        stop: StopCriterion::TFinal,
        t_final: 8.0,
        record_stride: 100,
        ..FlowOptions::default()
    };
    let traj = run_flow(&w, &opts).unwrap();
    let drift = traj.final_state.omega.field().max_abs_diff(w.field()).unwrap();
    assert!(drift < 1e-10, "{drift:e}");
}
