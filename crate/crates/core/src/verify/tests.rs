use super::*;
use crate::systems::{gallery, SystemParts};
use crate::tracker::{evolve, TrackerConfig};

fn v(x: &[f64]) -> State {
    DVector::from_vec(x.to_vec())
}

fn data(ubar: PiecewiseConstFn, g1: PiecewiseConstFn, g2: PiecewiseConstFn) -> IbvpData {
    IbvpData { initial: ubar, g1, g2 }
}

fn linear2_problem(t: f64) -> (SystemDef, IbvpData) {
    let sys = gallery("linear2").unwrap();
    let ubar = PiecewiseConstFn::new(0.0, 1.0, vec![0.3, 0.7], vec![v(&[0.0, 0.0]), v(&[0.04, -0.02]), v(&[0.01, 0.03])])
        .unwrap();
    let g1 = PiecewiseConstFn::new(0.0, t, vec![0.4], vec![v(&[0.0]), v(&[0.02])]).unwrap();
    let g2 = PiecewiseConstFn::new(0.0, t, vec![0.9], vec![v(&[0.01]), v(&[-0.01])]).unwrap();
    (sys, data(ubar, g1, g2))
}

fn solve(sys: &SystemDef, d: &IbvpData, t: f64, eps: f64) -> FrontSolution {
    let run = evolve(sys, &d.initial, &d.g1, &d.g2, t, &TrackerConfig::new(eps)).unwrap();
    FrontSolution::forward(sys.clone(), run)
}

#[test]
fn bump_shape() {
    assert_eq!(cubic_bump(0.0), 1.0);
    assert_eq!(cubic_bump(1.0), 0.0);
    assert_eq!(cubic_bump(-1.3), 0.0);
    let h = 1e-6;
    let slope = (0..2000)
        .map(|k| {
            let s = -1.0 + k as f64 / 1000.0;
            ((cubic_bump(s + h) - cubic_bump(s - h)) / (2.0 * h)).abs()
        })
        .fold(0.0, f64::max);
    assert!((slope - BUMP_SLOPE).abs() < 1e-6, "{slope}");
    let b = Bump { t0: 0.5, x0: 0.5, ht: 0.1, hx: 0.2 };
    assert_eq!(b.c1_norm(), 15.0);
}

#[test]
fn line_integral_matches_fine_midpoint_rule() {
    let b = Bump { t0: 0.4, x0: 0.6, ht: 0.15, hx: 0.1 };
    for &(t0, x0, t1, x1) in &[(0.1, 0.3, 0.9, 0.8), (0.2, 0.6, 0.7, 0.6), (0.4, 0.0, 0.4, 1.0), (0.0, 0.0, 0.1, 0.1)] {
        let n = 400_000;
        let fine: f64 = (0..n)
            .map(|k| {
                let s = (k as f64 + 0.5) / n as f64;
                b.eval(t0 + s * (t1 - t0), x0 + s * (x1 - x0))
            })
            .sum::<f64>()
            / n as f64;
        assert!((b.line_integral(t0, x0, t1, x1) - fine).abs() < 1e-9);
    }
}

#[test]
fn basis_sits_inside_the_rectangle() {
    let basis = standard_basis((0.0, 2.0), (0.0, 1.0));
    assert_eq!(basis.len(), 50);
    assert!(basis.iter().all(|b| b.inside((0.0, 2.0), (0.0, 1.0))));
}

#[test]
fn linear_fronts_have_zero_weak_and_entropy_residual() {
    let (sys, d) = linear2_problem(1.2);
    let sol = solve(&sys, &d, 1.2, 1e-3);
    let basis = standard_basis(sol.t_span, sol.x_span);
    let w = weak_residual(&sol, &basis).unwrap();
    assert!(w.max < 1e-13, "{}", w.max);
    let e = entropy_residual(&sol, &basis).unwrap();
    assert!(e.max < 1e-13, "{}", e.max);
}

#[test]
fn wrong_flux_is_detected() {
    let (sys, d) = linear2_problem(1.0);
    let mut sol = solve(&sys, &d, 1.0, 1e-3);
    let mut parts = sys.parts();
    parts.g = SmoothMap::linear(DMatrix::from_row_slice(2, 2, &[0.5, 1.2, 1.5, 0.5]));
    sol.base = SystemDef::from_parts(parts).unwrap();
    let w = weak_residual(&sol, &standard_basis(sol.t_span, sol.x_span)).unwrap();
    assert!(w.max > 1e-4, "{}", w.max);
}

#[test]
fn missing_entropy_pair_and_bad_support() {
    let (sys, d) = linear2_problem(1.0);
    let mut sol = solve(&sys, &d, 1.0, 1e-3);
    let wide = [Bump { t0: 0.5, x0: 0.05, ht: 0.1, hx: 0.1 }];
    assert!(matches!(weak_residual(&sol, &wide), Err(Error::SupportViolation)));
    let parts = SystemParts { entropy: None, ..sys.parts() };
    sol.base = SystemDef::from_parts(parts).unwrap();
    let basis = standard_basis(sol.t_span, sol.x_span);
    assert!(matches!(entropy_residual(&sol, &basis), Err(Error::NoEntropyPair)));
    let rep = residual_report(&sol, &d, 8).unwrap();
    assert!(rep.entropy.is_none());
}

#[test]
fn chaplygin_residuals_stay_small() {
    let sys = gallery("chaplygin").unwrap();
    let c = sys.center().clone();
    let ubar = PiecewiseConstFn::new(0.0, 1.0, vec![0.5], vec![c.clone(), &c + v(&[0.03, -0.02])]).unwrap();
    let g1 = PiecewiseConstFn::constant(0.0, 1.0, sys.b1().eval(&c)).unwrap();
    let g2 = PiecewiseConstFn::constant(0.0, 1.0, sys.b2().eval(&c)).unwrap();
    let d = data(ubar, g1, g2);
    let eps = 1e-3;
    let sol = solve(&sys, &d, 1.0, eps);
    let rep = residual_report(&sol, &d, 16).unwrap();
    assert!(rep.weak.max <= rep.weak_bound(1e-9), "{rep}");
    assert!(rep.entropy.as_ref().unwrap().max < 1e-6, "{rep}");
    assert!(rep.clauses.passes(eps, 1e-9), "{rep}");
}

#[test]
fn clauses_and_profiles() {
    let (sys, d) = linear2_problem(1.0);
    let sol = solve(&sys, &d, 1.0, 1e-3);
    let rep = residual_report(&sol, &d, 10).unwrap();
    assert!(rep.clauses.max() < 1e-12, "{rep}");
    assert_eq!(rep.tv_profile.len(), 11);
    assert_eq!(rep.lipschitz_profile.len(), 10);
    let tv0 = d.initial.tv();
    assert!((rep.tv_profile[0].1 - tv0).abs() < 1e-15);
    // L¹ rate of a transported step is at most sup|λ| times its TV
    let bound = sys.ball_stats().sup_abs * rep.tv_profile.iter().map(|p| p.1).fold(0.0, f64::max);
    assert!(rep.lipschitz_profile.iter().all(|p| p.1 <= bound * 1.5 + 0.1));
    assert_eq!(rep.profile_csv().lines().count(), 12);
    let text = rep.to_string();
    assert!(text.contains("weak_residual = ") && text.contains("right_l1 = "));
}

#[test]
fn exact_oracle_transports_a_single_wave() {
    // a single family-2 jump, with the boundary data of the state it leaves behind
    let sys = gallery("linear2").unwrap();
    let sd = sys.eigen(sys.center()).unwrap();
    let r2 = sd.r(1) * 0.05;
    let ubar = PiecewiseConstFn::new(0.0, 1.0, vec![0.2], vec![r2.clone(), v(&[0.0, 0.0])]).unwrap();
    let g1 = PiecewiseConstFn::constant(0.0, 0.5, sys.b1().eval(&r2)).unwrap();
    let g2 = PiecewiseConstFn::constant(0.0, 0.5, v(&[0.0])).unwrap();
    let d = data(ubar, g1, g2);
    let ex = ExactLinear::new(&sys, &d, 0.5).unwrap();
    let u = ex.slice(0.3).unwrap();
    let x_front = 0.2 + 2.0 * 0.3;
    let want = PiecewiseConstFn::new(0.0, 1.0, vec![x_front], vec![r2, v(&[0.0, 0.0])]).unwrap();
    assert!(u.l1_dist(&want).unwrap() < 1e-14);
}

#[test]
fn exact_oracle_agrees_with_front_tracking() {
    let t = 2.5;
    let (sys, d) = linear2_problem(t);
    let sol = solve(&sys, &d, t, 1e-3);
    let times = even_times((0.0, t), 10);
    let errs = oracle_compare(&sol, &d, Oracle::Exact, &times).unwrap();
    assert!(errs.iter().all(|e| e.1 < 1e-12), "{errs:?}");
}

#[test]
fn exact_oracle_multiple_family() {
    let t = 1.5;
    let sys = gallery("linear3_mult2").unwrap();
    let ubar = PiecewiseConstFn::new(0.0, 1.0, vec![0.5], vec![v(&[0.0, 0.0, 0.0]), v(&[0.02, -0.01, 0.03])]).unwrap();
    let g1 = PiecewiseConstFn::new(0.0, t, vec![0.6], vec![v(&[0.0]), v(&[0.01])]).unwrap();
    let g2 = PiecewiseConstFn::constant(0.0, t, v(&[0.0, 0.0])).unwrap();
    let d = data(ubar, g1, g2);
    let sol = solve(&sys, &d, t, 1e-3);
    let errs = oracle_compare(&sol, &d, Oracle::Exact, &[0.4, 1.0, 1.5]).unwrap();
    assert!(errs.iter().all(|e| e.1 < 1e-12), "{errs:?}");
}

#[test]
fn exact_oracle_refuses_nonlinear_systems() {
    let sys = gallery("chaplygin").unwrap();
    let c = sys.center().clone();
    let d = data(
        PiecewiseConstFn::constant(0.0, 1.0, c.clone()).unwrap(),
        PiecewiseConstFn::constant(0.0, 1.0, sys.b1().eval(&c)).unwrap(),
        PiecewiseConstFn::constant(0.0, 1.0, sys.b2().eval(&c)).unwrap(),
    );
    assert!(matches!(ExactLinear::new(&sys, &d, 1.0), Err(Error::NoOracle(_))));
}

#[test]
fn finite_volumes_approach_the_exact_solution() {
    let t = 1.0;
    let (sys, d) = linear2_problem(t);
    let ex = ExactLinear::new(&sys, &d, t).unwrap();
    let exact = ex.slice(t).unwrap();
    let err = |cells| {
        let fv = godunov(&sys, &d, cells, 0.45, &[t]).unwrap();
        fv[0].l1_dist(&exact).unwrap()
    };
    let (coarse, fine) = (err(256), err(1024));
    assert!(fine < coarse, "{coarse} {fine}");
    assert!(fine < 0.1 * d.initial.tv() + 0.01, "{fine}");
}

#[test]
fn finite_volumes_keep_equilibria_on_nonlinear_systems() {
    let sys = gallery("chaplygin").unwrap();
    let c = sys.center().clone();
    let d = data(
        PiecewiseConstFn::constant(0.0, 1.0, c.clone()).unwrap(),
        PiecewiseConstFn::constant(0.0, 0.5, sys.b1().eval(&c)).unwrap(),
        PiecewiseConstFn::constant(0.0, 0.5, sys.b2().eval(&c)).unwrap(),
    );
    let out = godunov(&sys, &d, 64, 0.45, &[0.25, 0.5]).unwrap();
    assert_eq!(out.len(), 2);
    assert!(out[1].l1_dist_const(&c) < 1e-12);
    assert!(matches!(godunov(&sys, &d, 0, 0.45, &[0.5]), Err(Error::InvalidArgument(_))));
    assert!(matches!(godunov(&sys, &d, 8, 1.5, &[0.5]), Err(Error::InvalidArgument(_))));
}
