//! Scenario execution and artifact emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ldfront::control::{min_control_time, synthesize, ControlSpec, Mode, Thresholds};
use ldfront::error::Error;
use ldfront::tracker::{evolve, render_svg, Compliance};
use ldfront::verify::{even_times, oracle_compare, residual_report, IbvpData, Oracle};
use ldfront::{FrontSolution, PiecewiseConstFn, Result};

use crate::scenario::{OracleChoice, Scenario, Task};

/// Tolerance on Rankine–Hugoniot residuals of physical fronts.
pub const RH_TOL: f64 = 1e-9;

pub fn thresholds(sc: &Scenario) -> Vec<Thresholds> {
    Mode::ALL.iter().filter_map(|&m| min_control_time(&sc.system, m, sc.length).ok()).collect()
}

pub fn manifest(sc: &Scenario) -> String {
    let mut s = String::new();
    writeln!(s, "# ldfront {}", env!("CARGO_PKG_VERSION")).unwrap();
    s.push_str(&sc.resolved());
    writeln!(s, "horizon.chosen = {}", sc.horizon).unwrap();
    for th in thresholds(sc) {
        let m = th.mode.name();
        writeln!(s, "threshold.{m}.at_center = {}", th.at_origin).unwrap();
        writeln!(s, "threshold.{m}.over_ball = {}", th.over_ball).unwrap();
    }
    s
}

/// Warning when `T` clears the threshold at the center but not the one over the ball.
pub fn threshold_warning(sc: &Scenario, mode: Mode) -> Option<String> {
    let th = min_control_time(&sc.system, mode, sc.length).ok()?;
    (sc.horizon > th.at_origin && sc.horizon <= th.over_ball).then(|| {
        format!(
            "T = {} exceeds the {} threshold at the center ({:.6}) but not the one over the ball ({:.6})",
            sc.horizon, mode, th.at_origin, th.over_ball
        )
    })
}

fn compliance_lines(s: &mut String, c: &Compliance) {
    writeln!(s, "fronts = {}", c.fronts).unwrap();
    writeln!(s, "max_rh = {:.6e}", c.max_rh).unwrap();
    writeln!(s, "max_speed_dev = {:.6e}", c.max_speed_dev).unwrap();
    writeln!(s, "max_np_total = {:.6e}", c.max_np_total).unwrap();
    writeln!(s, "initial_l1 = {:.6e}", c.initial_l1).unwrap();
    writeln!(s, "left_l1 = {:.6e}", c.left_l1).unwrap();
    writeln!(s, "right_l1 = {:.6e}", c.right_l1).unwrap();
}

fn boundary_data(sc: &Scenario) -> Result<(PiecewiseConstFn, PiecewiseConstFn)> {
    let sys = &sc.system;
    let g1 = match &sc.g1 {
        Some(d) => d.value.clone(),
        None => PiecewiseConstFn::constant(0.0, sc.horizon, sys.b1().eval(sc.initial.value.first()))?,
    };
    let g2 = match &sc.g2 {
        Some(d) => d.value.clone(),
        None => PiecewiseConstFn::constant(0.0, sc.horizon, sys.b2().eval(sc.initial.value.last()))?,
    };
    Ok((g1, g2))
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    fs::write(dir.join(name), body)?;
    Ok(())
}

fn write_solution(sc: &Scenario, sol: &FrontSolution) -> Result<()> {
    write(&sc.out_dir, "fronts.csv", &sol.to_csv())?;
    if sc.svg {
        write(&sc.out_dir, "diagram.svg", &render_svg(sol))?;
    }
    Ok(())
}

/// Runs the scenario, writing `manifest`, `fronts.csv`, `controls_*.csv`,
/// `report.txt` and optionally `diagram.svg` into the output directory.
/// Errors are also recorded in `report.txt` when the directory exists.
/// Returns whether every enabled check passed.
pub fn run(sc: &Scenario) -> Result<bool> {
    fs::create_dir_all(&sc.out_dir)?;
    write(&sc.out_dir, "manifest", &manifest(sc))?;
    let mut report = String::new();
    writeln!(report, "mode = {}", sc.task.name()).unwrap();
    writeln!(report, "system = {}", sc.system.name()).unwrap();
    writeln!(report, "horizon = {}", sc.horizon).unwrap();
    for th in thresholds(sc) {
        writeln!(report, "{th}").unwrap();
    }
    let warning = match sc.task {
        Task::Control(mode) => threshold_warning(sc, mode),
        _ => None,
    };
    if let Some(w) = &warning {
        eprintln!("warning: {w}");
        writeln!(report, "warning = {w}").unwrap();
    }
    let result = match sc.task {
        Task::Simulate => simulate(sc, &mut report, false),
        Task::Verify => simulate(sc, &mut report, true),
        Task::Control(mode) => control(sc, mode, &mut report),
    };
    match result {
        Ok(passed) => {
            writeln!(report, "status = {}", if passed { "pass" } else { "fail" }).unwrap();
            write(&sc.out_dir, "report.txt", &report)?;
            Ok(passed)
        }
        Err(e) => {
            if let Error::TimeTooShort { threshold, which, .. } = e.root() {
                writeln!(report, "refused = T below the {which} {threshold:.6}").unwrap();
            }
            writeln!(report, "error = {e}").unwrap();
            writeln!(report, "status = error").unwrap();
            write(&sc.out_dir, "report.txt", &report)?;
            Err(e)
        }
    }
}

fn simulate(sc: &Scenario, report: &mut String, verify: bool) -> Result<bool> {
    let sys = &sc.system;
    let (g1, g2) = boundary_data(sc)?;
    write(&sc.out_dir, "controls_g1.csv", &g1.to_csv())?;
    write(&sc.out_dir, "controls_g2.csv", &g2.to_csv())?;
    let run = evolve(sys, &sc.initial.value, &g1, &g2, sc.horizon, &sc.tracker)?;
    let sol = FrontSolution::forward(sys.clone(), run);
    write_solution(sc, &sol)?;
    let c = sol.compliance()?;
    compliance_lines(report, &c);
    let mut passed = c.passes(sc.epsilon, RH_TOL);
    writeln!(report, "final_tv = {:.6e}", sol.final_state()?.tv()).unwrap();
    if verify {
        let data = IbvpData { initial: sc.initial.value.clone(), g1, g2 };
        let rep = residual_report(&sol, &data, sc.samples)?;
        writeln!(report, "{rep}").unwrap();
        write(&sc.out_dir, "profiles.csv", &rep.profile_csv())?;
        passed &= rep.passed(RH_TOL, 1e-9);
        let linear = sys.constant_matrix().is_some()
            && sys.b1().as_linear().is_some()
            && sys.b2().as_linear().is_some();
        let oracle = match sc.oracle {
            OracleChoice::None => None,
            OracleChoice::Exact => Some(Oracle::Exact),
            OracleChoice::Godunov => Some(Oracle::Godunov { cells: sc.cells, cfl: sc.cfl }),
            OracleChoice::Auto if linear => Some(Oracle::Exact),
            OracleChoice::Auto => Some(Oracle::Godunov { cells: sc.cells, cfl: sc.cfl }),
        };
        if let Some(oracle) = oracle {
            let times = even_times(sol.t_span, sc.samples);
            let errs = oracle_compare(&sol, &data, oracle, &times)?;
            let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
            let name = match oracle {
                Oracle::Exact => "exact",
                Oracle::Godunov { .. } => "godunov",
            };
            writeln!(report, "oracle = {name}").unwrap();
            writeln!(report, "oracle_l1_max = {worst:.6e}").unwrap();
            if oracle == Oracle::Exact {
                let tv = data.initial.tv();
                let bound = sc.epsilon + 2.0 * sc.mesh * tv + 1e-9;
                writeln!(report, "oracle_bound = {bound:.6e}").unwrap();
                passed &= worst <= bound;
            }
        }
    }
    Ok(passed)
}

fn control(sc: &Scenario, mode: Mode, report: &mut String) -> Result<bool> {
    let sys = &sc.system;
    let c = sys.center();
    let target = match &sc.target {
        Some(d) => d.value.clone(),
        None => PiecewiseConstFn::constant(0.0, sc.length, c.clone())?,
    };
    let mut spec = ControlSpec::new(mode, sc.initial.value.clone(), target, sc.horizon, sc.epsilon);
    spec.tracker = sc.tracker.clone();
    spec.mesh = sc.mesh;
    spec.gap_steps = sc.gap_steps;
    spec.interface = sc.interface;
    spec.force = sc.force;
    if mode.needs_given() {
        let given = match &sc.given {
            Some(d) => d.value.clone(),
            None if mode == Mode::OneSided => PiecewiseConstFn::constant(0.0, sc.horizon, sys.b1().eval(c))?,
            None => {
                let b2c = sys.b2().eval(c);
                PiecewiseConstFn::constant(0.0, sc.horizon, b2c.rows(0, sc.reduced_rows).into_owned())?
            }
        };
        spec = spec.with_given(given);
    }
    let res = synthesize(sys, &spec)?;
    write(&sc.out_dir, "controls_g1.csv", &res.g1.to_csv())?;
    write(&sc.out_dir, "controls_g2.csv", &res.g2.to_csv())?;
    write(&sc.out_dir, "controls_interface.csv", &res.interface.to_csv())?;
    match &res.resim {
        Some(run) => write_solution(sc, &FrontSolution::forward(sys.clone(), run.clone()))?,
        None => write_solution(sc, &res.certificate)?,
    }
    write(&sc.out_dir, "certificate_fronts.csv", &res.certificate.to_csv())?;
    writeln!(report, "{}", res.report).unwrap();
    writeln!(report, "final_l1 = {:.6e}", res.report.final_l1()).unwrap();
    Ok(res.report.passed())
}
