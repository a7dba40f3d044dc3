use nalgebra::{DMatrix, DVector};

use super::*;
use crate::systems::{linear_system, Multiplicity};
use crate::systems::gallery;

fn v(x: &[f64]) -> State {
    DVector::from_vec(x.to_vec())
}

fn zero_on(sys: &SystemDef, len: f64) -> PiecewiseConstFn {
    PiecewiseConstFn::constant(0.0, len, sys.center().clone()).unwrap()
}

fn step(sys: &SystemDef, x: f64, jump: &[f64]) -> PiecewiseConstFn {
    let c = sys.center();
    PiecewiseConstFn::step(0.0, 1.0, x, c.clone(), c + v(jump)).unwrap()
}

#[test]
fn linear2_thresholds() {
    let sys = gallery("linear2").unwrap();
    let two = min_control_time(&sys, Mode::TwoSided, 1.0).unwrap();
    assert!((two.at_origin - 1.0).abs() < 1e-12 && (two.over_ball - 1.0).abs() < 1e-12);
    let one = min_control_time(&sys, Mode::OneSided, 1.0).unwrap();
    assert!((one.at_origin - 1.5).abs() < 1e-12 && (one.over_ball - 1.5).abs() < 1e-12);
    assert!((one.t1 - 1.0).abs() < 1e-12 && (one.t2 - 0.5).abs() < 1e-12);
    let less = min_control_time(&sys, Mode::TwoSidedLess, 2.0).unwrap();
    assert!((less.t1 - 1.0).abs() < 1e-12 && (less.t2 - 2.0).abs() < 1e-12);
}

#[test]
fn chaplygin_ball_threshold_exceeds_center_threshold() {
    let sys = gallery("chaplygin").unwrap();
    let th = min_control_time(&sys, Mode::TwoSided, 1.0).unwrap();
    assert!((th.at_origin - 1.0).abs() < 1e-9, "{th}");
    assert!(th.over_ball > 1.0 + 1e-3, "{th}");
}

#[test]
fn mode_names_round_trip() {
    for m in Mode::ALL {
        assert_eq!(m.name().parse::<Mode>().unwrap(), m);
    }
    assert!("both".parse::<Mode>().is_err());
}

#[test]
fn stacked_functions_share_breaks() {
    let a = PiecewiseConstFn::step(0.0, 1.0, 0.3, v(&[0.0]), v(&[1.0])).unwrap();
    let b = PiecewiseConstFn::step(0.0, 1.0, 0.6, v(&[2.0]), v(&[3.0])).unwrap();
    let s = stack_fns(&a, &b).unwrap();
    assert_eq!(s.breaks(), &[0.3, 0.6]);
    assert_eq!(s.values(), &[v(&[0.0, 2.0]), v(&[1.0, 2.0]), v(&[1.0, 3.0])]);
}

#[test]
fn staircase_interpolates_between_ends() {
    let f = gap_staircase(&v(&[0.0]), &v(&[1.0]), 1.0, 2.0, 4, &[1.1], &|_, u| Ok(u)).unwrap();
    assert_eq!(f.cell_count(), 5);
    assert!((f.tv() - 0.825).abs() < 1e-12);
}

#[test]
fn equilibrium_gives_constant_controls() {
    for (name, mode) in [
        ("linear2", Mode::TwoSided),
        ("chaplygin", Mode::TwoSided),
        ("linear2", Mode::OneSided),
        ("linear3_mult2", Mode::TwoSidedLess),
    ] {
        let sys = gallery(name).unwrap();
        let z = zero_on(&sys, 1.0);
        let t = min_control_time(&sys, mode, 1.0).unwrap().over_ball + 0.25;
        let mut spec = ControlSpec::new(mode, z.clone(), z, t, 1e-3);
        let c = sys.center();
        match mode {
            Mode::OneSided => spec.given = Some(PiecewiseConstFn::constant(0.0, t, sys.b1().eval(c)).unwrap()),
            Mode::TwoSidedLess => {
                let g = sys.b2().eval(c).rows(0, sys.n() - sys.m()).into_owned();
                spec.given = Some(PiecewiseConstFn::constant(0.0, t, g).unwrap());
            }
            Mode::TwoSided => {}
        }
        let res = synthesize(&sys, &spec).unwrap();
        assert_eq!(res.g1.cell_count(), 1, "{name} {mode}");
        assert_eq!(res.g2.cell_count(), 1, "{name} {mode}");
        assert!((res.g1.first() - sys.b1().eval(c)).norm() < 1e-12);
        assert!((res.g2.first() - sys.b2().eval(c)).norm() < 1e-12);
        assert!(res.certificate.segments().is_empty());
        assert_eq!(res.report.final_l1(), 0.0);
        assert!(res.report.passed(), "{}", res.report);
    }
}

#[test]
fn two_sided_linear2_reaches_rest() {
    let sys = gallery("linear2").unwrap();
    let spec = ControlSpec::new(Mode::TwoSided, step(&sys, 0.3, &[0.04, 0.0]), zero_on(&sys, 1.0), 1.5, 1e-3);
    let res = control_two_sided(&sys, &spec).unwrap();
    let r = &res.report;
    assert!(r.resim_final_l1.unwrap() <= 1e-2, "{r}");
    assert!(r.certificate_initial_l1 < 1e-12 && r.certificate_final_l1 < 1e-12, "{r}");
    assert!(r.passed(), "{r}");
    assert_eq!(r.phases.len(), 5);
    // the certificate carries the controls on its traces
    let left = res.certificate.trace_left().unwrap().map(|u| sys.b1().eval(u));
    assert!(left.l1_dist(&res.g1).unwrap() < 1e-15);
}

#[test]
fn two_sided_to_nonzero_target() {
    let sys = gallery("linear2").unwrap();
    let target = step(&sys, 0.7, &[0.0, 0.03]);
    let spec = ControlSpec::new(Mode::TwoSided, step(&sys, 0.3, &[0.04, 0.0]), target, 1.5, 1e-3);
    let r = control_two_sided(&sys, &spec).unwrap().report;
    assert!(r.final_l1() <= 1e-2 && r.passed(), "{r}");
}

#[test]
fn two_sided_multiple_family() {
    let sys = gallery("linear3_mult2").unwrap();
    let t = min_control_time(&sys, Mode::TwoSided, 1.0).unwrap().over_ball + 0.3;
    let spec = ControlSpec::new(
        Mode::TwoSided,
        step(&sys, 0.4, &[0.02, -0.01, 0.01]),
        step(&sys, 0.55, &[-0.01, 0.02, 0.0]),
        t,
        1e-3,
    );
    let r = control_two_sided(&sys, &spec).unwrap().report;
    assert!(r.final_l1() <= 1e-2 && r.passed(), "{r}");
}

#[test]
fn two_sided_nonlinear_systems() {
    for (name, jump) in [("triangular_ld", [0.02, 0.01]), ("chaplygin", [0.01, 0.005])] {
        let sys = gallery(name).unwrap();
        let t = min_control_time(&sys, Mode::TwoSided, 1.0).unwrap().over_ball + 0.2;
        let spec = ControlSpec::new(Mode::TwoSided, step(&sys, 0.35, &jump), zero_on(&sys, 1.0), t, 1e-3);
        let r = control_two_sided(&sys, &spec).unwrap().report;
        assert!(r.final_l1() <= 1e-2 && r.passed(), "{name}\n{r}");
    }
}

#[test]
fn one_sided_linear2() {
    let sys = gallery("linear2").unwrap();
    let g1 = PiecewiseConstFn::constant(0.0, 2.0, sys.b1().eval(sys.center())).unwrap();
    let spec = ControlSpec::new(Mode::OneSided, step(&sys, 0.3, &[0.04, 0.0]), zero_on(&sys, 1.0), 2.0, 1e-3)
        .with_given(g1.clone());
    let res = control_one_sided(&sys, &spec).unwrap();
    let r = &res.report;
    assert!(r.final_l1() <= 1e-2 && r.passed(), "{r}");
    assert!(r.given_trace_l1.unwrap() <= 1e-3);
    assert_eq!(res.g1, g1);
}

#[test]
fn one_sided_refuses_short_horizon_unless_forced() {
    let sys = gallery("linear2").unwrap();
    let g1 = PiecewiseConstFn::constant(0.0, 1.2, sys.b1().eval(sys.center())).unwrap();
    let spec = ControlSpec::new(Mode::OneSided, step(&sys, 0.3, &[0.04, 0.0]), zero_on(&sys, 1.0), 1.2, 1e-3)
        .with_given(g1);
    match control_one_sided(&sys, &spec) {
        Err(Error::TimeTooShort { threshold, .. }) => assert!((threshold - 1.5).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    let r = control_one_sided(&sys, &spec.forced(true)).unwrap().report;
    assert!(r.forced && r.margin < 0.0);
    assert!(r.final_l1() > 1e-3, "{r}");
}

#[test]
fn one_sided_time_varying_given_data() {
    let sys = gallery("linear2").unwrap();
    let c = sys.b1().eval(sys.center());
    let g1 = PiecewiseConstFn::new(0.0, 2.0, vec![0.5, 1.3], vec![c.clone(), c.add_scalar(0.01), c]).unwrap();
    let spec = ControlSpec::new(Mode::OneSided, step(&sys, 0.6, &[0.0, 0.02]), zero_on(&sys, 1.0), 2.0, 1e-3)
        .with_given(g1);
    let r = control_one_sided(&sys, &spec).unwrap().report;
    assert!(r.final_l1() <= 1e-2 && r.passed(), "{r}");
    assert!(r.given_trace_l1.unwrap() < 1e-12, "{r}");
}

#[test]
fn reduced_controls_multiple_family() {
    let sys = gallery("linear3_mult2").unwrap();
    let t = min_control_time(&sys, Mode::TwoSidedLess, 1.0).unwrap().over_ball + 0.25;
    let gt = sys.b2().eval(sys.center()).rows(0, 1).into_owned();
    let spec = ControlSpec::new(
        Mode::TwoSidedLess,
        step(&sys, 0.4, &[0.02, -0.01, 0.01]),
        step(&sys, 0.6, &[0.0, 0.01, 0.01]),
        t,
        1e-3,
    )
    .with_given(PiecewiseConstFn::constant(0.0, t, gt).unwrap());
    let res = control_two_sided_less(&sys, &spec).unwrap();
    let r = &res.report;
    assert!(r.final_l1() <= 1e-2 && r.passed(), "{r}");
    assert!(r.given_trace_l1.unwrap() <= 1e-3, "{r}");
    assert_eq!(res.g2_hat(&sys).dim(), 1);
}

#[test]
fn reduced_controls_reject_rank_deficient_map() {
    // b̃₂ = l₁ u annihilates the only positive family
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    let sys = linear_system("bad", a, 2, Multiplicity { k: 0, p: 2 }, 0.5, |sd| {
        let mut b2 = DMatrix::zeros(2, 3);
        b2.set_row(0, &sd.l(0));
        b2.set_row(1, &sd.l(1));
        (DMatrix::from_rows(&[sd.l(2)]), b2)
    })
    .unwrap();
    let z = zero_on(&sys, 1.0);
    let spec = ControlSpec::new(Mode::TwoSidedLess, z.clone(), z, 3.0, 1e-3)
        .with_given(PiecewiseConstFn::constant(0.0, 3.0, v(&[0.0])).unwrap());
    let r = control_two_sided_less(&sys, &spec);
    assert!(matches!(r, Err(Error::RankCondition(_))), "{r:?}");
}

#[test]
fn one_sided_needs_enough_negative_families() {
    // m = 1 < n − m = 2
    let a = DMatrix::from_diagonal(&v(&[-1.0, 1.0, 2.0]));
    let sys = linear_system("wide", a, 1, Multiplicity::SIMPLE, 0.5, |sd| {
        (DMatrix::from_rows(&[sd.l(1), sd.l(2)]), DMatrix::from_rows(&[sd.l(0)]))
    })
    .unwrap();
    let z = zero_on(&sys, 1.0);
    let spec = ControlSpec::new(Mode::OneSided, z.clone(), z, 3.0, 1e-3)
        .with_given(PiecewiseConstFn::constant(0.0, 3.0, v(&[0.0, 0.0])).unwrap());
    assert!(matches!(control_one_sided(&sys, &spec), Err(Error::RankCondition(_))));
}

#[test]
fn phase_errors_are_tagged() {
    let sys = gallery("linear2").unwrap();
    let big = step(&sys, 0.5, &[0.3, 0.3]);
    let spec = ControlSpec::new(Mode::TwoSided, big.clone(), big, 1.5, 1e-3);
    let err = control_two_sided(&sys, &spec).unwrap_err();
    assert!(matches!(err, Error::InPhase { .. }), "{err}");
}
