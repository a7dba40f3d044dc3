//! Constructive boundary controllability.
//!
//! Each pipeline runs a forward phase from `ū`, a backward phase from `u₁`, an interface
//! function `a(t)` on a line `x = const`, and sideways solves that fill the
//! rectangle. The controls are read off the traces of the resulting certificate
//! and checked by re-simulating the base problem forward.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::bvfun::PiecewiseConstFn;
use crate::directional::{eigen_forms, glue, glue_tol, negative_families, positive_families, OrientedProblem};
use crate::error::{Error, Phase, Result};
use crate::riemann::{sided_groups, solve_boundary_left, solve_constraint};
use crate::systems::{halton_ball, SmoothMap, SystemDef};
use crate::tracker::{evolve, AxisMap, Compliance, FrontSolution, Orientation, TrackerConfig, TrackerRun};
use crate::State;

/// Which boundary data are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Both `g₁` and `g₂` are controls.
    TwoSided,
    /// `g₁` is given, `g₂` is the control.
    OneSided,
    /// The first `n − m` components `g̃₂` of `g₂` are given; `g₁` and the
    /// remaining components `ĝ₂` are controls.
    TwoSidedLess,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::TwoSided, Mode::OneSided, Mode::TwoSidedLess];

    pub fn name(self) -> &'static str {
        match self {
            Mode::TwoSided => "two_sided",
            Mode::OneSided => "one_sided",
            Mode::TwoSidedLess => "two_sided_less",
        }
    }

    /// Whether the mode takes given boundary data.
    pub fn needs_given(self) -> bool {
        self != Mode::TwoSided
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown control mode `{s}`")))
    }
}

/// Minimal control times for a mode on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub mode: Mode,
    pub length: f64,
    /// Threshold from the speeds at the ball center.
    pub at_origin: f64,
    /// Threshold from the extreme speeds over the ball; enforced by the pipelines.
    pub over_ball: f64,
    /// `L max_ball 1/|λ_m|` for two-sided and one-sided, `L max_ball 1/λ_{m+1}`
    /// for reduced controls: the forward window needed at the interface line.
    pub t1: f64,
    /// The backward window, with the roles of the two speeds exchanged.
    pub t2: f64,
}

impl Thresholds {
    /// Short description of the enforced inequality.
    pub fn formula(&self) -> &'static str {
        match self.mode {
            Mode::TwoSided => "T > L max{1/|λ_m|, 1/λ_(m+1)}",
            Mode::OneSided | Mode::TwoSidedLess => "T > L (1/|λ_m| + 1/λ_(m+1))",
        }
    }
}

impl fmt::Display for Thresholds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} threshold {}: at_center = {:.6}, over_ball = {:.6} (T1 = {:.6}, T2 = {:.6})",
            self.mode,
            self.formula(),
            self.at_origin,
            self.over_ball,
            self.t1,
            self.t2
        )
    }
}

/// Inverse speeds `(1/|λ_m|, 1/λ_{m+1})`, zero for an absent side.
fn inverse_speeds(sys: &SystemDef, neg: f64, pos: f64) -> (f64, f64) {
    let m = sys.m();
    let n = sys.n();
    (if m > 0 { 1.0 / neg.abs() } else { 0.0 }, if m < n { 1.0 / pos } else { 0.0 })
}

/// Control-time thresholds of `sys` on `[0, length]`.
pub fn min_control_time(sys: &SystemDef, mode: Mode, length: f64) -> Result<Thresholds> {
    let m = sys.m();
    let n = sys.n();
    let lam = sys.eigen(sys.center())?.lambdas;
    let (nc, pc) = inverse_speeds(sys, if m > 0 { lam[m - 1] } else { 1.0 }, if m < n { lam[m] } else { 1.0 });
    let st = sys.ball_stats();
    let (nb, pb) = inverse_speeds(
        sys,
        if m > 0 { st.lambda_max[m - 1] } else { 1.0 },
        if m < n { st.lambda_min[m] } else { 1.0 },
    );
    let th = match mode {
        Mode::TwoSided => {
            let t1 = length * nb.max(pb);
            Thresholds { mode, length, at_origin: length * nc.max(pc), over_ball: t1, t1, t2: t1 }
        }
        Mode::OneSided => Thresholds {
            mode,
            length,
            at_origin: length * (nc + pc),
            over_ball: length * (nb + pb),
            t1: length * nb,
            t2: length * pb,
        },
        Mode::TwoSidedLess => Thresholds {
            mode,
            length,
            at_origin: length * (nc + pc),
            over_ball: length * (nb + pb),
            t1: length * pb,
            t2: length * nb,
        },
    };
    Ok(th)
}

/// Input of a control pipeline.
#[derive(Debug, Clone)]
pub struct ControlSpec {
    pub mode: Mode,
    /// `ū` on `[0, L]`.
    pub initial: PiecewiseConstFn,
    /// `u₁` on `[0, L]`.
    pub target: PiecewiseConstFn,
    /// `g₁` (one-sided) or `g̃₂` (reduced controls) on `[0, T]`.
    pub given: Option<PiecewiseConstFn>,
    pub horizon: f64,
    pub tracker: TrackerConfig,
    /// Sampling width used to build the data, `0` for exact piecewise-constant data.
    pub mesh: f64,
    /// Number of cells of the interface staircase across the gap between phases.
    pub gap_steps: usize,
    /// Interface line of the two-sided pipeline; `None` means `L/2`.
    pub interface: Option<f64>,
    /// Run below the threshold, shrinking the phase windows to fit.
    pub force: bool,
    /// Evolve the base problem with the synthesized controls and measure the final error.
    pub resimulate: bool,
}

impl ControlSpec {
    pub fn new(mode: Mode, initial: PiecewiseConstFn, target: PiecewiseConstFn, horizon: f64, epsilon: f64) -> Self {
        ControlSpec {
            mode,
            initial,
            target,
            given: None,
            horizon,
            tracker: TrackerConfig::new(epsilon),
            mesh: 0.0,
            gap_steps: 4,
            interface: None,
            force: false,
            resimulate: true,
        }
    }

    pub fn with_given(mut self, g: PiecewiseConstFn) -> Self {
        self.given = Some(g);
        self
    }

    pub fn forced(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.tracker.epsilon
    }

    pub fn length(&self) -> f64 {
        self.initial.domain().1
    }

    /// Final-state acceptance tolerance `10 (ε + mesh (TV(ū) + TV(u₁)))`.
    pub fn tolerance(&self) -> f64 {
        10.0 * (self.epsilon() + self.mesh * (self.initial.tv() + self.target.tv()))
    }
}

/// Diagnostics of one phase.
#[derive(Debug, Clone)]
pub struct PhaseReport {
    pub phase: Phase,
    /// Base time window covered.
    pub window: (f64, f64),
    pub fronts: usize,
    pub events: usize,
    pub max_np: f64,
    pub compliance: Compliance,
    pub elapsed: Duration,
}

impl PhaseReport {
    fn of(phase: Phase, window: (f64, f64), run: &TrackerRun, sys: &SystemDef, elapsed: Duration) -> Result<Self> {
        Ok(PhaseReport {
            phase,
            window,
            fronts: run.segments.len(),
            events: run.events.len(),
            max_np: run.max_np,
            compliance: run.compliance(sys).map_err(|e| e.in_phase(phase))?,
            elapsed,
        })
    }
}

/// Summary of a pipeline run.
#[derive(Debug, Clone)]
pub struct ControlReport {
    pub mode: Mode,
    pub horizon: f64,
    pub epsilon: f64,
    pub thresholds: Thresholds,
    /// `T` minus the threshold the pipeline needed (negative for forced runs).
    pub margin: f64,
    pub forced: bool,
    /// Forward and backward window lengths.
    pub windows: (f64, f64),
    pub tolerance: f64,
    /// `‖u(0,·) − ū‖₁` of the certificate.
    pub certificate_initial_l1: f64,
    /// `‖u(T,·) − u₁‖₁` of the certificate.
    pub certificate_final_l1: f64,
    /// `‖u(T,·) − u₁‖₁` after re-simulating forward with the controls.
    pub resim_final_l1: Option<f64>,
    /// `L¹` mismatch between the given data and the certificate trace.
    pub given_trace_l1: Option<f64>,
    pub tv_controls: f64,
    pub tv_interface: f64,
    pub weld_mass: f64,
    pub phases: Vec<PhaseReport>,
}

impl ControlReport {
    /// Final error used for acceptance: re-simulated if available.
    pub fn final_l1(&self) -> f64 {
        self.resim_final_l1.unwrap_or(self.certificate_final_l1)
    }

    pub fn passed(&self) -> bool {
        let eps = self.epsilon;
        self.final_l1() <= self.tolerance
            && self.certificate_initial_l1 <= self.tolerance
            && self.given_trace_l1.is_none_or(|d| d <= eps)
            && self.phases.iter().all(|p| p.compliance.passes(eps, 1e-9))
    }
}

impl fmt::Display for ControlReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode = {}", self.mode)?;
        writeln!(f, "horizon = {}", self.horizon)?;
        writeln!(f, "epsilon = {}", self.epsilon)?;
        writeln!(f, "threshold.formula = {}", self.thresholds.formula())?;
        writeln!(f, "threshold.at_center = {:.12}", self.thresholds.at_origin)?;
        writeln!(f, "threshold.over_ball = {:.12}", self.thresholds.over_ball)?;
        writeln!(f, "threshold.t1 = {:.12}", self.thresholds.t1)?;
        writeln!(f, "threshold.t2 = {:.12}", self.thresholds.t2)?;
        writeln!(f, "margin = {:.12}", self.margin)?;
        writeln!(f, "forced = {}", self.forced)?;
        writeln!(f, "window.forward = {:.12}", self.windows.0)?;
        writeln!(f, "window.backward = {:.12}", self.windows.1)?;
        writeln!(f, "tolerance = {:.6e}", self.tolerance)?;
        writeln!(f, "certificate.initial_l1 = {:.6e}", self.certificate_initial_l1)?;
        writeln!(f, "certificate.final_l1 = {:.6e}", self.certificate_final_l1)?;
        if let Some(r) = self.resim_final_l1 {
            writeln!(f, "resim.final_l1 = {r:.6e}")?;
        }
        if let Some(g) = self.given_trace_l1 {
            writeln!(f, "given_trace_l1 = {g:.6e}")?;
        }
        writeln!(f, "final_l1 = {:.6e}", self.final_l1())?;
        writeln!(f, "tv_controls = {:.6e}", self.tv_controls)?;
        writeln!(f, "tv_interface = {:.6e}", self.tv_interface)?;
        writeln!(f, "weld_mass = {:.6e}", self.weld_mass)?;
        for p in &self.phases {
            let c = &p.compliance;
            writeln!(
                f,
                "phase.{} = window [{:.6}, {:.6}], fronts {}, events {}, max_np {:.3e}, rh {:.3e}, left_l1 {:.3e}, right_l1 {:.3e}, {:.3} ms",
                p.phase,
                p.window.0,
                p.window.1,
                p.fronts,
                p.events,
                p.max_np,
                c.max_rh,
                c.left_l1,
                c.right_l1,
                p.elapsed.as_secs_f64() * 1e3
            )?;
        }
        write!(f, "passed = {}", self.passed())
    }
}

/// Controls and the certificate that produced them.
#[derive(Debug, Clone)]
pub struct ControlResult {
    /// `b₁` of the certificate's left trace on `[0, T]`.
    pub g1: PiecewiseConstFn,
    /// `b₂` of the certificate's right trace on `[0, T]`.
    pub g2: PiecewiseConstFn,
    /// The interface function `a(t)`.
    pub interface: PiecewiseConstFn,
    pub certificate: FrontSolution,
    /// The forward re-simulation, if requested.
    pub resim: Option<TrackerRun>,
    pub report: ControlReport,
}

impl ControlResult {
    /// `ĝ₂`, the last `m − (n − m)` components of `g₂` (reduced controls).
    pub fn g2_hat(&self, sys: &SystemDef) -> PiecewiseConstFn {
        let mbar = sys.n() - sys.m();
        self.g2.map(|v| v.rows(mbar, v.len() - mbar).into_owned())
    }
}

/// Runs the pipeline selected by `spec.mode`.
pub fn synthesize(sys: &SystemDef, spec: &ControlSpec) -> Result<ControlResult> {
    match spec.mode {
        Mode::TwoSided => control_two_sided(sys, spec),
        Mode::OneSided => control_one_sided(sys, spec),
        Mode::TwoSidedLess => control_two_sided_less(sys, spec),
    }
}

fn join(a: &State, b: &State) -> State {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Pairs two functions on the same interval into one with stacked values.
pub fn stack_fns(a: &PiecewiseConstFn, b: &PiecewiseConstFn) -> Result<PiecewiseConstFn> {
    PiecewiseConstFn::combine(&[a, b], |v| join(v[0], v[1]))
}

fn validate_spec(sys: &SystemDef, spec: &ControlSpec) -> Result<()> {
    let (a, b) = spec.initial.domain();
    let (a1, b1) = spec.target.domain();
    if a != 0.0 || b <= 0.0 {
        return Err(Error::EmptyDomain { a, b });
    }
    if (a1, b1) != (a, b) {
        return Err(Error::DomainMismatch { a0: a, b0: b, a1, b1 });
    }
    if spec.initial.dim() != sys.n() || spec.target.dim() != sys.n() {
        return Err(Error::InvalidArgument(format!("data must take values in R^{}", sys.n())));
    }
    if !(spec.horizon > 0.0) {
        return Err(Error::EmptyDomain { a: 0.0, b: spec.horizon });
    }
    let mbar = sys.n() - sys.m();
    match (spec.mode, &spec.given) {
        (Mode::TwoSided, _) => {}
        (_, None) => {
            return Err(Error::InvalidArgument(format!("{} control needs given boundary data", spec.mode)));
        }
        (mode, Some(g)) => {
            let (ga, gb) = g.domain();
            if ga != 0.0 || (gb - spec.horizon).abs() > 1e-12 * spec.horizon.max(1.0) {
                return Err(Error::DomainMismatch { a0: 0.0, b0: spec.horizon, a1: ga, b1: gb });
            }
            if g.dim() != mbar {
                return Err(Error::InvalidArgument(format!(
                    "{mode} given data must have {mbar} components, found {}",
                    g.dim()
                )));
            }
        }
    }
    if let Some(x) = spec.interface {
        if !(x > 0.0 && x < b) {
            return Err(Error::InvalidArgument(format!("interface {x} outside (0, {b})")));
        }
    }
    Ok(())
}

const RANK_TOL: f64 = 1e-8;

/// Full row rank relative to `scale`, the product of the factor norms.
fn full_row_rank(mat: &DMatrix<f64>, scale: f64) -> bool {
    if mat.nrows() == 0 {
        return true;
    }
    if mat.nrows() > mat.ncols() {
        return false;
    }
    let sv = mat.clone().svd(false, false).singular_values;
    sv.min() > RANK_TOL * scale.max(f64::MIN_POSITIVE)
}

/// Checks `rank[Db(u)·r_j(u)]_{j ∈ fams} = rows(b)` at the center and on a Halton sample of the ball.
fn rank_over_ball(sys: &SystemDef, b: &SmoothMap, fams: Range<usize>) -> Result<bool> {
    let mut pts = vec![sys.center().clone()];
    pts.extend(halton_ball(sys.center(), sys.r_ball(), 32, 7));
    for u in &pts {
        let sd = sys.eigen(u)?;
        let db = b.jacobian(u, sys.fd_step());
        let r = DMatrix::from_fn(sys.n(), fams.len(), |i, c| sd.right[(i, fams.start + c)]);
        let scale = db.norm() * r.norm();
        if !full_row_rank(&(db * r), scale) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_os(sys: &SystemDef) -> Result<()> {
    if sys.n() - sys.m() > sys.m() {
        return Err(Error::RankCondition("n - m <= m"));
    }
    Ok(())
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Negative families complementing the best-conditioned `n − m` of them for `b₁`
/// at the center.
fn one_sided_complement(sys: &SystemDef) -> Result<Vec<usize>> {
    let m = sys.m();
    let mbar = sys.n() - m;
    let c = sys.center();
    let sd = sys.eigen(c)?;
    let db = sys.b1().jacobian(c, sys.fd_step());
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in subsets(m, mbar) {
        let r = DMatrix::from_fn(sys.n(), mbar, |i, k| sd.right[(i, s[k])]);
        let det = (&db * r).determinant().abs();
        if best.as_ref().is_none_or(|b| det > b.0) {
            best = Some((det, s));
        }
    }
    let (det, chosen) = best.expect("at least one subset");
    if !(det > RANK_TOL) {
        return Err(Error::RankCondition("det[Db1 r_1..r_(n-m)] != 0"));
    }
    Ok((0..m).filter(|i| !chosen.contains(i)).collect())
}

/// Window lengths `(forward, backward)` and the threshold they require.
fn windows(sys: &SystemDef, spec: &ControlSpec, th: &Thresholds) -> (f64, f64, f64) {
    let len = spec.length();
    let (w_f, w_b) = match spec.mode {
        Mode::TwoSided => {
            let xs = spec.interface.unwrap_or(0.5 * len);
            let st = sys.ball_stats();
            let m = sys.m();
            let (nb, pb) = inverse_speeds(
                sys,
                if m > 0 { st.lambda_max[m - 1] } else { 1.0 },
                if m < sys.n() { st.lambda_min[m] } else { 1.0 },
            );
            let left = xs;
            let right = len - xs;
            ((left * pb).max(right * nb), (left * nb).max(right * pb))
        }
        _ => (th.t1, th.t2),
    };
    (w_f, w_b, w_f + w_b)
}

/// Interface staircase across the gap `(lo, hi)`: linear interpolation between
/// `a0` and `a1`, sampled at cell midpoints and passed through `project`.
fn gap_staircase(
    a0: &State,
    a1: &State,
    lo: f64,
    hi: f64,
    steps: usize,
    extra: &[f64],
    project: &dyn Fn(f64, State) -> Result<State>,
) -> Result<PiecewiseConstFn> {
    let steps = steps.max(1);
    let mut breaks: Vec<f64> = (1..steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    breaks.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (hi - lo));
    let mut edges = vec![lo];
    edges.extend(&breaks);
    edges.push(hi);
    let values = edges
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let theta = (mid - lo) / (hi - lo);
            project(mid, a0 + (a1 - a0) * theta)
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseConstFn::new(lo, hi, breaks, values)
}

/// Assembles `a(t)` on `[0, T]` from the forward part, the backward part and,
/// when they leave a gap, a staircase between them.
fn assemble_interface(
    fwd: PiecewiseConstFn,
    bwd: PiecewiseConstFn,
    steps: usize,
    extra: &[f64],
    project: &dyn Fn(f64, State) -> Result<State>,
) -> Result<PiecewiseConstFn> {
    let (_, lo) = fwd.domain();
    let (hi, _) = bwd.domain();
    if hi - lo <= 1e-12 * hi.max(1.0) {
        let bwd = bwd.reparametrize(lo, bwd.domain().1, false)?;
        return PiecewiseConstFn::concat(&[fwd, bwd]);
    }
    let gap = gap_staircase(fwd.last(), bwd.first(), lo, hi, steps, extra, project)?;
    PiecewiseConstFn::concat(&[fwd, gap, bwd])
}

struct Phases {
    forward: TrackerRun,
    backward: FrontSolution,
    reports: Vec<PhaseReport>,
}

/// Forward phase on `[0, w_f]` and backward phase on `[T − w_b, T]`, run concurrently.
#[allow(clippy::too_many_arguments)]
fn run_phases(
    sys: &SystemDef,
    spec: &ControlSpec,
    w_f: f64,
    w_b: f64,
    fwd_g1: PiecewiseConstFn,
    fwd_g2: PiecewiseConstFn,
    back_b1: SmoothMap,
    back_b2: SmoothMap,
    back_g1: PiecewiseConstFn,
    back_g2: PiecewiseConstFn,
) -> Result<Phases> {
    let t = spec.horizon;
    let len = spec.length();
    let cfg = &spec.tracker;
    let forward = || -> Result<(TrackerRun, Duration)> {
        let clock = Instant::now();
        let run = evolve(sys, &spec.initial, &fwd_g1, &fwd_g2, w_f, cfg).map_err(|e| e.in_phase(Phase::Forward))?;
        Ok((run, clock.elapsed()))
    };
    let backward = || -> Result<(FrontSolution, Duration)> {
        let clock = Instant::now();
        let axes = AxisMap::new(Orientation::Backward, (t - w_b, t), (0.0, len));
        let prob = OrientedProblem::new(sys, axes, back_b1, back_b2).map_err(|e| e.in_phase(Phase::Backward))?;
        let init = prob.native_initial(&spec.target)?;
        let g1 = prob.native_boundary(&back_g1)?;
        let g2 = prob.native_boundary(&back_g2)?;
        let sol = crate::directional::solve_oriented(&prob, &init, &g1, &g2, cfg)
            .map_err(|e| e.in_phase(Phase::Backward))?;
        Ok((sol, clock.elapsed()))
    };
    let (f, b) = std::thread::scope(|s| {
        let h = s.spawn(forward);
        let b = backward();
        (h.join().expect("forward phase panicked"), b)
    });
    let (forward, tf) = f?;
    let (backward, tb) = b?;
    let piece = &backward.pieces[0];
    let reports = vec![
        PhaseReport::of(Phase::Forward, (0.0, w_f), &forward, sys, tf)?,
        PhaseReport::of(Phase::Backward, (t - w_b, t), &piece.run, &piece.sys, tb)?,
    ];
    Ok(Phases { forward, backward, reports })
}

/// One sideways solve on `[x_lo, x_hi]` with interface data `a` on its initial edge.
fn sideways(
    sys: &SystemDef,
    spec: &ControlSpec,
    o: Orientation,
    x: (f64, f64),
    a: &PiecewiseConstFn,
) -> Result<(FrontSolution, Duration)> {
    let phase = if o == Orientation::Leftward { Phase::Leftward } else { Phase::Rightward };
    let clock = Instant::now();
    let run = || -> Result<FrontSolution> {
        let neg = eigen_forms(sys, negative_families(sys))?;
        let pos = eigen_forms(sys, positive_families(sys))?;
        // incoming families at t = 0 are the ones moving into the rectangle from below
        let (b1, b2) = if o == Orientation::Leftward { (neg, pos) } else { (pos, neg) };
        let axes = AxisMap::new(o, (0.0, spec.horizon), x);
        let bottom = spec.initial.restrict(x.0, x.1)?.map(|u| b1.eval(u));
        let top = spec.target.restrict(x.0, x.1)?.map(|u| b2.eval(u));
        let prob = OrientedProblem::new(sys, axes, b1, b2)?;
        let init = prob.native_initial(a)?;
        let g1 = prob.native_boundary(&bottom)?;
        let g2 = prob.native_boundary(&top)?;
        crate::directional::solve_oriented(&prob, &init, &g1, &g2, &spec.tracker)
    };
    let sol = run().map_err(|e| e.in_phase(phase))?;
    Ok((sol, clock.elapsed()))
}

fn sideways_report(sol: &FrontSolution, o: Orientation, elapsed: Duration, t: f64) -> Result<PhaseReport> {
    let phase = if o == Orientation::Leftward { Phase::Leftward } else { Phase::Rightward };
    let p = &sol.pieces[0];
    PhaseReport::of(phase, (0.0, t), &p.run, &p.sys, elapsed)
}

/// Required threshold, forced-window scaling and the time check.
fn plan(sys: &SystemDef, spec: &ControlSpec) -> Result<(Thresholds, f64, f64, f64)> {
    validate_spec(sys, spec)?;
    let th = min_control_time(sys, spec.mode, spec.length())?;
    let (w_f, w_b, need) = windows(sys, spec, &th);
    let t = spec.horizon;
    if t <= need {
        if !spec.force {
            let which = match spec.mode {
                Mode::TwoSided => "two-sided over-ball threshold L max{1/|λ_m|, 1/λ_(m+1)}",
                _ => "one-sided over-ball threshold L (1/|λ_m| + 1/λ_(m+1))",
            };
            return Err(Error::TimeTooShort { t, threshold: need, which });
        }
        let s = t / need;
        return Ok((th, w_f * s, w_b * s, t - need));
    }
    Ok((th, w_f, w_b, t - need))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    sys: &SystemDef,
    spec: &ControlSpec,
    th: Thresholds,
    margin: f64,
    windows: (f64, f64),
    certificate: FrontSolution,
    interface: PiecewiseConstFn,
    mut phases: Vec<PhaseReport>,
) -> Result<ControlResult> {
    let extract = || -> Result<(PiecewiseConstFn, PiecewiseConstFn, f64, f64)> {
        let left = certificate.trace_left()?;
        let right = certificate.trace_right()?;
        let g1 = left.map(|u| sys.b1().eval(u));
        let g2 = right.map(|u| sys.b2().eval(u));
        let init = certificate.initial()?.l1_dist(&spec.initial)?;
        let fin = certificate.final_state()?.l1_dist(&spec.target)?;
        Ok((g1, g2, init, fin))
    };
    let (g1, g2, init_l1, final_l1) = extract().map_err(|e| e.in_phase(Phase::Extract))?;
    let mbar = sys.n() - sys.m();
    let (g1, g2, given_trace_l1) = match (spec.mode, &spec.given) {
        (Mode::OneSided, Some(g)) => {
            let d = g1.l1_dist(g).map_err(|e| e.in_phase(Phase::Extract))?;
            (g.clone(), g2, Some(d))
        }
        (Mode::TwoSidedLess, Some(g)) => {
            let tilde = g2.map(|v| v.rows(0, mbar).into_owned());
            let hat = g2.map(|v| v.rows(mbar, v.len() - mbar).into_owned());
            let d = tilde.l1_dist(g).map_err(|e| e.in_phase(Phase::Extract))?;
            let g2 = stack_fns(g, &hat).map_err(|e| e.in_phase(Phase::Extract))?;
            (g1, g2, Some(d))
        }
        _ => (g1, g2, None),
    };
    let mut resim = None;
    let mut resim_final_l1 = None;
    if spec.resimulate {
        let clock = Instant::now();
        let run = evolve(sys, &spec.initial, &g1, &g2, spec.horizon, &spec.tracker)
            .map_err(|e| e.in_phase(Phase::Resimulate))?;
        let d = run.final_state()?.l1_dist(&spec.target)?;
        phases.push(PhaseReport::of(Phase::Resimulate, (0.0, spec.horizon), &run, sys, clock.elapsed())?);
        resim_final_l1 = Some(d);
        resim = Some(run);
    }
    let report = ControlReport {
        mode: spec.mode,
        horizon: spec.horizon,
        epsilon: spec.epsilon(),
        thresholds: th,
        margin,
        forced: margin <= 0.0,
        windows,
        tolerance: spec.tolerance(),
        certificate_initial_l1: init_l1,
        certificate_final_l1: final_l1,
        resim_final_l1,
        given_trace_l1,
        tv_controls: g1.tv() + g2.tv(),
        tv_interface: interface.tv(),
        weld_mass: certificate.weld_mass,
        phases,
    };
    Ok(ControlResult { g1, g2, interface, certificate, resim, report })
}

fn constant(b: &SmoothMap, u: &State, lo: f64, hi: f64) -> Result<PiecewiseConstFn> {
    PiecewiseConstFn::constant(lo, hi, b.eval(u))
}

/// Both boundary data are controls. The interface is the vertical line
/// `x = L/2`; a leftward solve fills the left half and a rightward solve the
/// right half.
pub fn control_two_sided(sys: &SystemDef, spec: &ControlSpec) -> Result<ControlResult> {
    let (th, w_f, w_b, margin) = plan(sys, spec)?;
    let t = spec.horizon;
    let len = spec.length();
    let xs = spec.interface.unwrap_or(0.5 * len);
    let c = sys.center();
    let neg = eigen_forms(sys, negative_families(sys))?;
    let pos = eigen_forms(sys, positive_families(sys))?;
    let ph = run_phases(
        sys,
        spec,
        w_f,
        w_b,
        constant(sys.b1(), c, 0.0, w_f)?,
        constant(sys.b2(), c, 0.0, w_f)?,
        neg.clone(),
        pos.clone(),
        constant(&neg, c, t - w_b, t)?,
        constant(&pos, c, t - w_b, t)?,
    )?;
    let fwd = ph.forward.history(xs).map_err(|e| e.in_phase(Phase::Glue))?;
    let back_piece = &ph.backward.pieces[0];
    let bwd = back_piece.run.history(xs).and_then(|h| h.reparametrize(t - w_b, t, true)).map_err(|e| e.in_phase(Phase::Glue))?;
    let a = assemble_interface(fwd, bwd, spec.gap_steps, &[], &|_, v| Ok(v)).map_err(|e| e.in_phase(Phase::Glue))?;
    let (left, right) = std::thread::scope(|s| {
        let h = s.spawn(|| sideways(sys, spec, Orientation::Leftward, (0.0, xs), &a));
        let r = sideways(sys, spec, Orientation::Rightward, (xs, len), &a);
        (h.join().expect("leftward solve panicked"), r)
    });
    let (left, tl) = left?;
    let (right, tr) = right?;
    let mut phases = ph.reports;
    phases.push(sideways_report(&left, Orientation::Leftward, tl, t)?);
    phases.push(sideways_report(&right, Orientation::Rightward, tr, t)?);
    let eps = spec.epsilon();
    let certificate = glue(left, right, glue_tol(eps)).map_err(|e| e.in_phase(Phase::Glue))?;
    finish(sys, spec, th, margin, (w_f, w_b), certificate, a, phases)
}

/// `g₁` is given; `g₂` is the control. The interface is the left wall and a
/// rightward solve fills the whole rectangle.
pub fn control_one_sided(sys: &SystemDef, spec: &ControlSpec) -> Result<ControlResult> {
    validate_spec(sys, spec)?;
    check_os(sys)?;
    if !rank_over_ball(sys, sys.b1(), negative_families(sys))? {
        return Err(Error::RankCondition("rank[Db1 r_1..r_m] = n - m"));
    }
    let extra = one_sided_complement(sys)?;
    let (th, w_f, w_b, margin) = plan(sys, spec)?;
    let t = spec.horizon;
    let c = sys.center();
    let g1 = spec.given.as_ref().expect("validated");
    let neg = eigen_forms(sys, negative_families(sys))?;
    let pos = eigen_forms(sys, positive_families(sys))?;
    let (back_b1, back_g1) = if extra.is_empty() {
        (sys.b1().clone(), g1.restrict(t - w_b, t)?)
    } else {
        let forms = neg.select_rows(&extra);
        let zero = forms.eval(c);
        (sys.b1().stack(&forms), g1.restrict(t - w_b, t)?.map(|v| join(v, &zero)))
    };
    let ph = run_phases(
        sys,
        spec,
        w_f,
        w_b,
        g1.restrict(0.0, w_f)?,
        constant(sys.b2(), c, 0.0, w_f)?,
        back_b1,
        pos.clone(),
        back_g1,
        constant(&pos, c, t - w_b, t)?,
    )?;
    let fwd = ph.forward.left_trace.clone();
    let bwd = ph.backward.pieces[0].trace_lo().map_err(|e| e.in_phase(Phase::Glue))?;
    let project = |s: f64, v: State| -> Result<State> { Ok(solve_boundary_left(sys, g1.eval(s), &v)?.1) };
    let a = assemble_interface(fwd, bwd, spec.gap_steps, g1.breaks(), &project).map_err(|e| e.in_phase(Phase::Glue))?;
    let (sol, tr) = sideways(sys, spec, Orientation::Rightward, (0.0, spec.length()), &a)?;
    let mut phases = ph.reports;
    phases.push(sideways_report(&sol, Orientation::Rightward, tr, t)?);
    finish(sys, spec, th, margin, (w_f, w_b), sol, a, phases)
}

/// `g̃₂` (first `n − m` components of `g₂`) is given; `g₁` and `ĝ₂` are
/// controls. The interface is the right wall and a leftward solve fills the
/// whole rectangle.
pub fn control_two_sided_less(sys: &SystemDef, spec: &ControlSpec) -> Result<ControlResult> {
    validate_spec(sys, spec)?;
    check_os(sys)?;
    let m = sys.m();
    let mbar = sys.n() - m;
    let tilde: Vec<usize> = (0..mbar).collect();
    let hat: Vec<usize> = (mbar..m).collect();
    let b2_tilde = sys.b2().select_rows(&tilde);
    let b2_hat = sys.b2().select_rows(&hat);
    if !rank_over_ball(sys, &b2_tilde, positive_families(sys))? {
        return Err(Error::RankCondition("rank[Db2~ r_(m+1)..r_n] = n - m"));
    }
    let (th, w_f, w_b, margin) = plan(sys, spec)?;
    let t = spec.horizon;
    let c = sys.center();
    let g2t = spec.given.as_ref().expect("validated");
    let neg = eigen_forms(sys, negative_families(sys))?;
    let hat_c = b2_hat.eval(c);
    let ph = run_phases(
        sys,
        spec,
        w_f,
        w_b,
        constant(sys.b1(), c, 0.0, w_f)?,
        g2t.restrict(0.0, w_f)?.map(|v| join(v, &hat_c)),
        neg.clone(),
        b2_tilde.clone(),
        constant(&neg, c, t - w_b, t)?,
        g2t.restrict(t - w_b, t)?,
    )?;
    let fwd = ph.forward.right_trace.clone();
    let bwd = ph.backward.pieces[0].trace_hi().map_err(|e| e.in_phase(Phase::Glue))?;
    let groups = sided_groups(sys, true);
    let project = |s: f64, v: State| -> Result<State> {
        Ok(solve_constraint(sys, &b2_tilde, g2t.eval(s), &v, &groups, true)?.1)
    };
    let a = assemble_interface(fwd, bwd, spec.gap_steps, g2t.breaks(), &project).map_err(|e| e.in_phase(Phase::Glue))?;
    let (sol, tl) = sideways(sys, spec, Orientation::Leftward, (0.0, spec.length()), &a)?;
    let mut phases = ph.reports;
    phases.push(sideways_report(&sol, Orientation::Leftward, tl, t)?);
    finish(sys, spec, th, margin, (w_f, w_b), sol, a, phases)
}

#[cfg(test)]
mod tests;
