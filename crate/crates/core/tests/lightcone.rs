use std::f64::consts::PI;
use std::sync::Arc;

use lcflow::conformal::{gamma_norm2, gamma_trace, NormArg};
use lcflow::lightcone::{
    embed, eta, extrinsic_oracle_chi, gauss_residual, intrinsic_scalar_curvature, lightcone_quantities, null_frame,
    ConformalFactor,
};
use lcflow::spectral::{build_grid, harmonic, hessian0, integrate, ScalarField, SphereGrid};
use lcflow::steady::{boost_cross_section, mobius_omega, BoostSpec, SteadyStateParams};
use num_rational::Ratio;

fn grid(l: usize) -> Arc<SphereGrid<f64>> {
    build_grid(l, Ratio::from_integer(2)).unwrap()
}

fn tilted(g: &Arc<SphereGrid<f64>>) -> ConformalFactor<f64> {
    ConformalFactor::new(ScalarField::from_cartesian(g, |x| 1.0 + 0.1 * x[2])).unwrap()
}

#[test]
fn constant_two_gives_forced_values() {
    let g = grid(12);
    let w = ConformalFactor::constant(&g, 2.0).unwrap();
    let q = lightcone_quantities(&w).unwrap();
    for (f, v) in [(&q.theta_bar, 1.0), (&q.theta, 1.0), (&q.h2, 1.0), (&q.r, 0.5)] {
        assert!(f.values().iter().all(|x| (x - v).abs() < 1e-11));
    }
    assert!(q.zeta.max_abs() < 1e-12);
    assert!(q.a_ring.max_abs() < 1e-11);
    assert!((q.vol - 16.0 * PI).abs() < 1e-12);
}

#[test]
fn mobius_member_has_constant_h2() {
    let g = grid(24);
    let p = SteadyStateParams::new(1.0, [0.0, 0.0, 0.3]).unwrap();
    let w = mobius_omega(&p, &g).unwrap();
    let q = lightcone_quantities(&w).unwrap();
    assert!(q.h2.values().iter().all(|h| (h - 4.0).abs() < 1e-8));
    let a2 = gamma_norm2(w.field(), NormArg::Sym2(&q.a_ring)).unwrap();
    assert!(a2.max() < 1e-18);
    assert!(q.a_ring.max_abs() < 1e-9);
}

#[test]
fn theta_matches_intrinsic_curvature() {
    let g = grid(24);
    let w = tilted(&g);
    let q = lightcone_quantities(&w).unwrap();
    let r = intrinsic_scalar_curvature(&w).unwrap();
    // θ = 2ωK = ωR
    let oracle = r.zip_map(w.field(), |r, w| w * r).unwrap();
    assert!(q.theta.max_abs_diff(&oracle).unwrap() < 1e-8);
}

#[test]
fn traces_of_null_second_fundamental_forms() {
    let g = grid(24);
    let w = ConformalFactor::new(&harmonic(&g, 2, 1).scale(0.05) + &tilted(&g).field().clone()).unwrap();
    let q = lightcone_quantities(&w).unwrap();
    assert!(gamma_trace(w.field(), &q.chi).max_abs_diff(&q.theta).unwrap() < 1e-9);
    assert!(gamma_trace(w.field(), &q.chi_bar).max_abs_diff(&q.theta_bar).unwrap() < 1e-9);
    assert!(gamma_trace(w.field(), &q.a_ring).max_abs() < 1e-9);
}

#[test]
fn gauss_residual_examples() {
    let g = grid(32);
    let e = gauss_residual(&ConformalFactor::constant(&g, 2.0).unwrap()).unwrap();
    // Differentiating a constant amplifies analysis round-off by l(l+1).
    assert!(e < 1e-10, "{e:e}");
    assert!(gauss_residual(&tilted(&g)).unwrap() < 1e-8);
    let p = SteadyStateParams::new(1.0, [0.5, 0.0, 0.0]).unwrap();
    let w = mobius_omega(&p, &g).unwrap();
    assert!(gauss_residual(&w).unwrap() < 1e-8);
    let q = lightcone_quantities(&w).unwrap();
    assert!(q.r.values().iter().all(|r| (r - 2.0).abs() < 1e-8));
}

#[test]
fn gauss_bonnet() {
    let g = grid(32);
    let w = ConformalFactor::new(&harmonic(&g, 3, -2).scale(0.04) + &tilted(&g).field().clone()).unwrap();
    let q = lightcone_quantities(&w).unwrap();
    let total = integrate(&q.k.zip_map(w.field(), |k, w| k * w * w).unwrap());
    assert!((total - 4.0 * PI).abs() / (4.0 * PI) < 1e-8);
}

#[test]
fn trace_free_a_from_inverse_hessian() {
    let g = grid(24);
    let w = ConformalFactor::new(&harmonic(&g, 2, 0).scale(0.07) + &tilted(&g).field().clone()).unwrap();
    let q = lightcone_quantities(&w).unwrap();
    let lhs = gamma_norm2(w.field(), NormArg::Sym2(&q.a_ring)).unwrap();
    let h = hessian0(&w.field().map(|w| 1.0 / w)).unwrap().round_trace_free();
    let rhs = h.round_norm2().zip_map(w.field(), |h, w| 16.0 * h / (w * w)).unwrap();
    assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-8);
}

#[test]
fn boost_preserves_h2_range() {
    let g = grid(24);
    let w = ConformalFactor::new(&harmonic(&g, 2, 0).scale(0.05) + &ScalarField::constant(&g, 1.0)).unwrap();
    let b = BoostSpec::new(0.3, [0.0, 0.0, 1.0]).unwrap();
    let wb = boost_cross_section(&w, &b).unwrap();
    let (q0, q1) = (lightcone_quantities(&w).unwrap(), lightcone_quantities(&wb).unwrap());
    // Grid maxima differ from true extrema; compare against a finer sampling tolerance.
    assert!((q0.h2.max() - q1.h2.max()).abs() < 1e-3);
    assert!((q0.h2.min() - q1.h2.min()).abs() < 1e-3);
}

#[test]
fn embedding_lies_on_cone_and_reproduces_metric() {
    let g = grid(16);
    let w = tilted(&g);
    let pts = embed(&w).unwrap();
    assert_eq!(pts.max_cone_defect(), 0.0);
    let sin = g.sin_theta();
    for i in 0..g.n_theta() {
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            let om = w.field().values()[k];
            let (vt, vp) = (pts.v_theta[k], pts.v_phi[k]);
            assert!((eta(&vt, &vt) - om * om).abs() < 1e-12);
            assert!(eta(&vt, &vp).abs() < 1e-12);
            assert!((eta(&vp, &vp) - om * om * sin[i] * sin[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn round_section_frame() {
    let g = grid(8);
    let s = 1.7;
    let pts = null_frame(&ConformalFactor::constant(&g, s).unwrap()).unwrap();
    let l = pts.l.as_ref().unwrap();
    for k in 0..g.len() {
        let (e, lb) = (pts.events[k], pts.l_bar[k]);
        assert!((e[0] + s).abs() < 1e-14);
        assert!((l[k][0] - 1.0).abs() < 1e-12);
        for q in 1..4 {
            assert!((l[k][q] + lb[q] * -1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn frame_constraints_hold() {
    let g = grid(16);
    let pts = null_frame(&tilted(&g)).unwrap();
    let l = pts.l.as_ref().unwrap();
    for k in 0..g.len() {
        let lb = pts.l_bar[k];
        assert!(eta(&l[k], &l[k]).abs() < 1e-10);
        assert!(eta(&lb, &lb).abs() < 1e-14);
        assert!((eta(&lb, &l[k]) - 2.0).abs() < 1e-10);
        assert!(eta(&l[k], &pts.v_theta[k]).abs() < 1e-10);
        assert!(eta(&l[k], &pts.v_phi[k]).abs() < 1e-10);
        assert!(eta(&lb, &pts.v_theta[k]).abs() < 1e-12);
        assert!(eta(&lb, &pts.v_phi[k]).abs() < 1e-12);
    }
}

#[test]
fn oracle_chi_round() {
    let g = grid(8);
    let s = 1.3;
    let chi = extrinsic_oracle_chi(&ConformalFactor::constant(&g, s).unwrap(), 1e-3).unwrap();
    for i in 0..g.n_theta() {
        let s2 = g.sin_theta()[i].powi(2);
        for j in 0..g.n_phi() {
            let [tt, tp, pp] = chi.at(g.index(i, j));
            assert!((tt - s).abs() < 1e-6);
            assert!(tp.abs() < 1e-6);
            assert!((pp - s * s2).abs() < 1e-6);
        }
    }
}

#[test]
fn oracle_chi_second_order() {
    let g = grid(16);
    let w = tilted(&g);
    let exact = lightcone_quantities(&w).unwrap().chi;
    let e1 = extrinsic_oracle_chi(&w, 1e-3).unwrap().max_abs_diff(&exact).unwrap();
    let e2 = extrinsic_oracle_chi(&w, 5e-4).unwrap().max_abs_diff(&exact).unwrap();
    let order = (e1 / e2).log2();
    assert!(order > 1.9, "order {order}, errors {e1:e} {e2:e}");
}

#[test]
fn step_bounds_are_enforced() {
    let g = grid(8);
    let w = ConformalFactor::constant(&g, 1.0).unwrap();
    assert!(extrinsic_oracle_chi(&w, 0.0).is_err());
    assert!(extrinsic_oracle_chi(&w, 0.5).is_err());
    assert!(ConformalFactor::new(ScalarField::constant(&g, -1.0)).is_err());
}
