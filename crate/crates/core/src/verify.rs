//! Independent checks of approximate solutions.
//!
//! The weak and entropy residuals are evaluated against a fixed family of
//! compactly supported C¹ bumps. Because an approximate solution is constant
//! between straight fronts, the space-time integrals reduce to line integrals
//! along the fronts, which are computed exactly by splitting each front where
//! the bump is not polynomial and applying 6-point Gauss–Legendre quadrature.
//!
//! Reference solutions come from exact characteristics (linear systems) or from
//! a first-order upwind finite-volume scheme with a matrix frozen at the ball
//! center. Neither uses the crate's Riemann solvers.

use std::fmt;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::bvfun::PiecewiseConstFn;
use crate::error::{Error, Result};
use crate::systems::{SmoothMap, SystemDef};
use crate::tracker::FrontSolution;
use crate::State;

/// `B(s) = (1 − |s|)²(1 + 2|s|)` on `[−1, 1]`, zero outside.
pub fn cubic_bump(s: f64) -> f64 {
    let a = s.abs();
    if a >= 1.0 {
        0.0
    } else {
        (1.0 - a) * (1.0 - a) * (1.0 + 2.0 * a)
    }
}

/// `max |B'| = 3/2`, attained at `|s| = 1/2`.
const BUMP_SLOPE: f64 = 1.5;

/// Tensor bump `φ(t, x) = B((t − t₀)/h_t) B((x − x₀)/h_x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub t0: f64,
    pub x0: f64,
    pub ht: f64,
    pub hx: f64,
}

impl Bump {
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        cubic_bump((t - self.t0) / self.ht) * cubic_bump((x - self.x0) / self.hx)
    }

    pub fn c0_norm(&self) -> f64 {
        1.0
    }

    /// `max(sup|φ|, sup|∂ₜφ|, sup|∂ₓφ|)`.
    pub fn c1_norm(&self) -> f64 {
        1.0f64.max(BUMP_SLOPE / self.ht).max(BUMP_SLOPE / self.hx)
    }

    fn inside(&self, t_span: (f64, f64), x_span: (f64, f64)) -> bool {
        self.ht > 0.0
            && self.hx > 0.0
            && self.t0 - self.ht >= t_span.0
            && self.t0 + self.ht <= t_span.1
            && self.x0 - self.hx >= x_span.0
            && self.x0 + self.hx <= x_span.1
    }

    /// `∫₀¹ φ(P₀ + s(P₁ − P₀)) ds`, exact for straight segments.
    pub fn line_integral(&self, t0: f64, x0: f64, t1: f64, x1: f64) -> f64 {
        let (dt, dx) = (t1 - t0, x1 - x0);
        let mut cuts = vec![0.0, 1.0];
        for k in [-1.0, 0.0, 1.0] {
            if dt != 0.0 {
                cuts.push((self.t0 + k * self.ht - t0) / dt);
            }
            if dx != 0.0 {
                cuts.push((self.x0 + k * self.hx - x0) / dx);
            }
        }
        cuts.retain(|s| (0.0..=1.0).contains(s));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut sum = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (node, weight) in GAUSS6 {
                let s = mid + half * node;
                sum += weight * half * self.eval(t0 + s * dt, x0 + s * dx);
            }
        }
        sum
    }
}

/// 6-point Gauss–Legendre nodes and weights on `[−1, 1]`.
const GAUSS6: [(f64, f64); 6] = [
    (-0.932_469_514_203_152_1, 0.171_324_492_379_170_35),
    (-0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (-0.238_619_186_083_196_9, 0.467_913_934_572_691_05),
    (0.238_619_186_083_196_9, 0.467_913_934_572_691_05),
    (0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (0.932_469_514_203_152_1, 0.171_324_492_379_170_35),
];

/// Bumps centred on a 5 × 5 grid at two scales, supported in the open rectangle.
pub fn standard_basis(t_span: (f64, f64), x_span: (f64, f64)) -> Vec<Bump> {
    let (tl, xl) = (t_span.1 - t_span.0, x_span.1 - x_span.0);
    let mut out = Vec::with_capacity(50);
    for scale in [0.95 / 6.0, 0.95 / 12.0] {
        for i in 1..=5 {
            for j in 1..=5 {
                out.push(Bump {
                    t0: t_span.0 + tl * i as f64 / 6.0,
                    x0: x_span.0 + xl * j as f64 / 6.0,
                    ht: tl * scale,
                    hx: xl * scale,
                });
            }
        }
    }
    out
}

fn check_basis(sol: &FrontSolution, basis: &[Bump]) -> Result<()> {
    if basis.iter().all(|b| b.inside(sol.t_span, sol.x_span)) {
        Ok(())
    } else {
        Err(Error::SupportViolation)
    }
}

/// A straight jump from `(t0, x0)` to `(t1, x1)` with states on its low-`x` and high-`x` sides.
struct Jump {
    t0: f64,
    x0: f64,
    t1: f64,
    x1: f64,
    left: State,
    right: State,
}

/// Fronts of every piece plus the welds between consecutive pieces.
fn jumps(sol: &FrontSolution) -> Result<Vec<Jump>> {
    let mut out: Vec<Jump> = sol
        .segments()
        .into_iter()
        .filter(|s| s.t1 > s.t0)
        .map(|s| Jump { t0: s.t0, x0: s.x0, t1: s.t1, x1: s.x1, left: s.left, right: s.right })
        .collect();
    for w in sol.pieces.windows(2) {
        let xs = w[0].axes.x_hi;
        if (w[1].axes.x_lo - xs).abs() > 1e-12 * sol.length().max(1.0) {
            continue;
        }
        let lo = w[0].trace_hi()?;
        let hi = w[1].trace_lo()?;
        let pair = PiecewiseConstFn::combine(&[&lo, &hi], |v| {
            DVector::from_iterator(2 * v[0].len(), v[0].iter().chain(v[1].iter()).copied())
        })?;
        let n = lo.dim();
        for (ta, tb, v) in pair.cells() {
            let left = v.rows(0, n).into_owned();
            let right = v.rows(n, n).into_owned();
            if (&right - &left).norm() > 0.0 {
                out.push(Jump { t0: ta, x0: xs, t1: tb, x1: xs, left, right });
            }
        }
    }
    Ok(out)
}

fn residuals<F, G>(sol: &FrontSolution, basis: &[Bump], h: F, g: G) -> Result<Vec<f64>>
where
    F: Fn(&State) -> DVector<f64>,
    G: Fn(&State) -> DVector<f64>,
{
    let jumps = jumps(sol)?;
    let deltas: Vec<(DVector<f64>, DVector<f64>)> =
        jumps.iter().map(|j| (h(&j.right) - h(&j.left), g(&j.right) - g(&j.left))).collect();
    Ok(basis
        .iter()
        .map(|b| {
            let mut acc = DVector::zeros(deltas.first().map_or(0, |d| d.0.len()));
            for (j, (dh, dg)) in jumps.iter().zip(&deltas) {
                let phi = b.line_integral(j.t0, j.x0, j.t1, j.x1);
                if phi != 0.0 {
                    acc += dh * ((j.x1 - j.x0) * phi) - dg * ((j.t1 - j.t0) * phi);
                }
            }
            acc.norm()
        })
        .collect())
}

/// Weak-form residuals `|∬ ∂ₜφ H(u) + ∂ₓφ G(u)|` for each bump.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidual {
    pub per_bump: Vec<f64>,
    pub max: f64,
    /// Largest `‖φ‖_{C⁰}` of the basis.
    pub c0: f64,
    /// Largest `‖φ‖_{C¹}` of the basis.
    pub c1: f64,
}

impl WeakResidual {
    fn new(per_bump: Vec<f64>, basis: &[Bump]) -> Self {
        let max = per_bump.iter().copied().fold(0.0, f64::max);
        let c0 = basis.iter().map(Bump::c0_norm).fold(0.0, f64::max);
        let c1 = basis.iter().map(Bump::c1_norm).fold(0.0, f64::max);
        WeakResidual { per_bump, max, c0, c1 }
    }
}

/// Weak-solution residual of the conservation law.
pub fn weak_residual(sol: &FrontSolution, basis: &[Bump]) -> Result<WeakResidual> {
    check_basis(sol, basis)?;
    let sys = &sol.base;
    let r = residuals(sol, basis, |u| sys.eval_h(u), |u| sys.eval_g(u))?;
    Ok(WeakResidual::new(r, basis))
}

/// Entropy residual `|∬ ∂ₜφ η(u) + ∂ₓφ q(u)|` for the system's entropy pair.
pub fn entropy_residual(sol: &FrontSolution, basis: &[Bump]) -> Result<WeakResidual> {
    check_basis(sol, basis)?;
    let pair = sol.base.entropy().ok_or(Error::NoEntropyPair)?;
    let r = residuals(
        sol,
        basis,
        |u| DVector::from_element(1, (pair.eta)(u)),
        |u| DVector::from_element(1, (pair.q)(u)),
    )?;
    Ok(WeakResidual::new(r, basis))
}

/// Data of an initial-boundary value problem on `[0, T] × [0, L]`.
#[derive(Debug, Clone)]
pub struct IbvpData {
    pub initial: PiecewiseConstFn,
    pub g1: PiecewiseConstFn,
    pub g2: PiecewiseConstFn,
}

/// `L¹` errors of the initial and boundary clauses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClauseResiduals {
    pub initial_l1: f64,
    pub left_l1: f64,
    pub right_l1: f64,
}

impl ClauseResiduals {
    pub fn max(&self) -> f64 {
        self.initial_l1.max(self.left_l1).max(self.right_l1)
    }

    /// All clauses within `ε (1 + margin)`.
    pub fn passes(&self, eps: f64, margin: f64) -> bool {
        self.max() <= eps * (1.0 + margin)
    }
}

/// Re-measures `u(0,·) = ū`, `b₁(u(·,0+)) = g₁`, `b₂(u(·,L−)) = g₂` from the solution's own samples.
pub fn clause_residuals(
    sol: &FrontSolution,
    initial: &PiecewiseConstFn,
    g1: &PiecewiseConstFn,
    g2: &PiecewiseConstFn,
    b1: &SmoothMap,
    b2: &SmoothMap,
) -> Result<ClauseResiduals> {
    let initial_l1 = sol.initial()?.l1_dist(initial)?;
    let left = sol.trace_left()?.map(|u| b1.eval(u));
    let right = sol.trace_right()?.map(|u| b2.eval(u));
    let g1 = g1.restrict(sol.t_span.0, sol.t_span.1)?;
    let g2 = g2.restrict(sol.t_span.0, sol.t_span.1)?;
    Ok(ClauseResiduals { initial_l1, left_l1: left.l1_dist(&g1)?, right_l1: right.l1_dist(&g2)? })
}

/// `TV(u(t,·))` at the given times.
pub fn tv_profile(sol: &FrontSolution, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    times.iter().map(|&t| Ok((t, sol.sample(t)?.tv()))).collect()
}

/// Difference quotients `‖u(t_{k+1}) − u(t_k)‖₁ / (t_{k+1} − t_k)` at consecutive times.
pub fn lipschitz_profile(sol: &FrontSolution, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    let samples = times.iter().map(|&t| sol.sample(t)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(times.len().saturating_sub(1));
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        if dt > 0.0 {
            out.push((times[k - 1], samples[k].l1_dist(&samples[k - 1])? / dt));
        }
    }
    Ok(out)
}

/// Evenly spaced times `t_lo + (T − t_lo) k / count`, `k = 0..=count`.
pub fn even_times(t_span: (f64, f64), count: usize) -> Vec<f64> {
    (0..=count).map(|k| t_span.0 + (t_span.1 - t_span.0) * k as f64 / count as f64).collect()
}

/// All residuals of one solution.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub weak: WeakResidual,
    pub entropy: Option<WeakResidual>,
    pub clauses: ClauseResiduals,
    pub tv_profile: Vec<(f64, f64)>,
    pub lipschitz_profile: Vec<(f64, f64)>,
    pub epsilon: f64,
    pub horizon: f64,
}

impl ResidualReport {
    /// Bound `(ε + rh_tol) ‖φ‖_{C⁰} T` on the weak residual of an ε-solution.
    pub fn weak_bound(&self, rh_tol: f64) -> f64 {
        (self.epsilon + rh_tol) * self.weak.c0 * self.horizon
    }

    pub fn passed(&self, rh_tol: f64, margin: f64) -> bool {
        self.weak.max <= self.weak_bound(rh_tol) && self.clauses.passes(self.epsilon, margin)
    }

    /// `t,tv,lipschitz` rows; the last row has an empty quotient.
    pub fn profile_csv(&self) -> String {
        let mut s = String::from("t,tv,l1_rate\n");
        for (k, (t, tv)) in self.tv_profile.iter().enumerate() {
            match self.lipschitz_profile.get(k) {
                Some((_, q)) => writeln!(s, "{t},{tv},{q}").unwrap(),
                None => writeln!(s, "{t},{tv},").unwrap(),
            }
        }
        s
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "weak_residual = {:.6e}", self.weak.max)?;
        writeln!(f, "weak_bound = {:.6e}", self.weak_bound(1e-9))?;
        writeln!(f, "phi_c0 = {}", self.weak.c0)?;
        writeln!(f, "phi_c1 = {:.6}", self.weak.c1)?;
        match &self.entropy {
            Some(e) => writeln!(f, "entropy_residual = {:.6e}", e.max)?,
            None => writeln!(f, "entropy_residual = none")?,
        }
        writeln!(f, "initial_l1 = {:.6e}", self.clauses.initial_l1)?;
        writeln!(f, "left_l1 = {:.6e}", self.clauses.left_l1)?;
        writeln!(f, "right_l1 = {:.6e}", self.clauses.right_l1)?;
        let tv_max = self.tv_profile.iter().map(|p| p.1).fold(0.0, f64::max);
        let lip_max = self.lipschitz_profile.iter().map(|p| p.1).fold(0.0, f64::max);
        writeln!(f, "tv_max = {tv_max:.6e}")?;
        write!(f, "l1_rate_max = {lip_max:.6e}")
    }
}

/// Weak, entropy and clause residuals plus TV and `L¹`-rate profiles on `samples + 1` times.
pub fn residual_report(sol: &FrontSolution, data: &IbvpData, samples: usize) -> Result<ResidualReport> {
    let basis = standard_basis(sol.t_span, sol.x_span);
    let weak = weak_residual(sol, &basis)?;
    let entropy = match entropy_residual(sol, &basis) {
        Ok(e) => Some(e),
        Err(Error::NoEntropyPair) => None,
        Err(e) => return Err(e),
    };
    let sys = &sol.base;
    let clauses = clause_residuals(sol, &data.initial, &data.g1, &data.g2, sys.b1(), sys.b2())?;
    let times = even_times(sol.t_span, samples.max(1));
    Ok(ResidualReport {
        weak,
        entropy,
        clauses,
        tv_profile: tv_profile(sol, &times)?,
        lipschitz_profile: lipschitz_profile(sol, &times)?,
        epsilon: sol.epsilon,
        horizon: sol.horizon(),
    })
}

/// Reference solution used by [`oracle_compare`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    /// Exact characteristics; linear systems with linear boundary maps only.
    Exact,
    /// First-order upwind finite volumes with a frozen-matrix flux.
    Godunov { cells: usize, cfl: f64 },
}

impl Oracle {
    pub const GODUNOV: Oracle = Oracle::Godunov { cells: 4096, cfl: 0.45 };
}

/// `L¹` distance between `sol` and the oracle at each of `times`.
pub fn oracle_compare(sol: &FrontSolution, data: &IbvpData, oracle: Oracle, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    if sol.t_span.0 != 0.0 || sol.x_span.0 != 0.0 {
        return Err(Error::NoOracle("reference solvers start at t = 0 on [0, L]".into()));
    }
    let refs = match oracle {
        Oracle::Exact => {
            let ex = ExactLinear::new(&sol.base, data, sol.horizon())?;
            times.iter().map(|&t| ex.slice(t)).collect::<Result<Vec<_>>>()?
        }
        Oracle::Godunov { cells, cfl } => godunov(&sol.base, data, cells, cfl, times)?,
    };
    times.iter().zip(refs).map(|(&t, r)| Ok((t, sol.sample(t)?.l1_dist(&r)?))).collect()
}

fn scalar(f: &PiecewiseConstFn, k: usize) -> PiecewiseConstFn {
    f.map(|v| DVector::from_element(1, v[k]))
}

fn concat_nonempty(parts: Vec<PiecewiseConstFn>) -> Result<PiecewiseConstFn> {
    PiecewiseConstFn::concat(&parts)
}

/// Exact solution of a linear problem by characteristics. Each characteristic
/// variable `wᵢ = lᵢ·(u − c)` is transported at `λᵢ`; at the walls the incoming
/// variables are solved from the boundary condition given the outgoing ones.
pub struct ExactLinear {
    n: usize,
    m: usize,
    length: f64,
    horizon: f64,
    lambdas: Vec<f64>,
    right: DMatrix<f64>,
    center: State,
    w0: Vec<PiecewiseConstFn>,
    /// Incoming variables `w_{m..n}` at `x = 0`.
    left_in: PiecewiseConstFn,
    /// Incoming variables `w_{0..m}` at `x = L`.
    right_in: PiecewiseConstFn,
}

const DEGENERATE: f64 = 1e-14;

impl ExactLinear {
    pub fn new(sys: &SystemDef, data: &IbvpData, horizon: f64) -> Result<Self> {
        let no = || Error::NoOracle("exact characteristics need a linear system with linear boundary maps".into());
        sys.constant_matrix().ok_or_else(no)?;
        let m1 = sys.b1().as_linear().ok_or_else(no)?.clone();
        let m2 = sys.b2().as_linear().ok_or_else(no)?.clone();
        let (n, m) = (sys.n(), sys.m());
        let c = sys.center().clone();
        let sd = sys.eigen(&c)?;
        let length = data.initial.domain().1;
        let w0 = (0..n)
            .map(|i| {
                let l = sd.l(i);
                data.initial.map(|u| DVector::from_element(1, (&l * (u - &c))[0]))
            })
            .collect();
        let r = sd.right.clone();
        let r_pos = r.columns(m, n - m).into_owned();
        let r_neg = r.columns(0, m).into_owned();
        let p1 = (&m1 * &r_pos).try_inverse().ok_or(Error::BadBoundaryMap { cond: f64::INFINITY })?;
        let p2 = (&m2 * &r_neg).try_inverse().ok_or(Error::BadBoundaryMap { cond: f64::INFINITY })?;
        let mut ex = ExactLinear {
            n,
            m,
            length,
            horizon,
            lambdas: sd.lambdas.clone(),
            right: r,
            center: c.clone(),
            w0,
            left_in: PiecewiseConstFn::constant(0.0, horizon, DVector::zeros(n - m))?,
            right_in: PiecewiseConstFn::constant(0.0, horizon, DVector::zeros(m))?,
        };
        let g1 = data.g1.restrict(0.0, horizon)?;
        let g2 = data.g2.restrict(0.0, horizon)?;
        let fastest = ex.lambdas.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        let rounds = (horizon * fastest / length).ceil() as usize + 2;
        let m1c = &m1 * &c;
        let m2c = &m2 * &c;
        for _ in 0..rounds {
            let out_left = (0..m).map(|j| ex.along_line(j, 0.0)).collect::<Result<Vec<_>>>()?;
            let out_right = (m..n).map(|i| ex.along_line(i, length)).collect::<Result<Vec<_>>>()?;
            let mut parts: Vec<&PiecewiseConstFn> = vec![&g1];
            parts.extend(out_left.iter());
            let left_in = PiecewiseConstFn::combine(&parts, |v| {
                let w_neg = DVector::from_iterator(m, v[1..].iter().map(|x| x[0]));
                &p1 * (v[0] - &m1c - &m1 * (&r_neg * w_neg))
            })?;
            let mut parts: Vec<&PiecewiseConstFn> = vec![&g2];
            parts.extend(out_right.iter());
            let right_in = PiecewiseConstFn::combine(&parts, |v| {
                let w_pos = DVector::from_iterator(n - m, v[1..].iter().map(|x| x[0]));
                &p2 * (v[0] - &m2c - &m2 * (&r_pos * w_pos))
            })?;
            ex.left_in = left_in;
            ex.right_in = right_in;
        }
        Ok(ex)
    }

    fn inflow(&self, i: usize) -> PiecewiseConstFn {
        if i < self.m {
            scalar(&self.right_in, i)
        } else {
            scalar(&self.left_in, i - self.m)
        }
    }

    /// `wᵢ(·, x_q)` on `[0, T]`.
    fn along_line(&self, i: usize, x_q: f64) -> Result<PiecewiseConstFn> {
        let lam = self.lambdas[i];
        let (len, t_end) = (self.length, self.horizon);
        let dist = if lam > 0.0 { x_q } else { len - x_q };
        let tc = dist / lam.abs();
        let mut parts = Vec::new();
        let tm = tc.min(t_end);
        if tm > DEGENERATE {
            let reach = lam.abs() * tm;
            let p = if lam > 0.0 {
                self.w0[i].restrict(x_q - reach, x_q)?.reparametrize(0.0, tm, true)?
            } else {
                self.w0[i].restrict(x_q, x_q + reach)?.reparametrize(0.0, tm, false)?
            };
            parts.push(p);
        }
        if t_end - tc > DEGENERATE {
            let start = tc.max(0.0);
            parts.push(self.inflow(i).restrict(0.0, t_end - start)?.reparametrize(start, t_end, false)?);
        }
        concat_nonempty(parts)
    }

    /// `wᵢ(t, ·)` on `[0, L]`.
    fn family_slice(&self, i: usize, t: f64) -> Result<PiecewiseConstFn> {
        let lam = self.lambdas[i];
        let len = self.length;
        let shift = (lam.abs() * t).min(len);
        let mut parts = Vec::new();
        let from_wall = |lo: f64, hi: f64, rev: bool| -> Result<PiecewiseConstFn> {
            let span = shift / lam.abs();
            self.inflow(i).restrict(t - span, t)?.reparametrize(lo, hi, rev)
        };
        if lam > 0.0 {
            if shift > DEGENERATE {
                parts.push(from_wall(0.0, shift, true)?);
            }
            if len - shift > DEGENERATE {
                parts.push(self.w0[i].restrict(0.0, len - shift)?.reparametrize(shift, len, false)?);
            }
        } else {
            if len - shift > DEGENERATE {
                parts.push(self.w0[i].restrict(shift, len)?.reparametrize(0.0, len - shift, false)?);
            }
            if shift > DEGENERATE {
                parts.push(from_wall(len - shift, len, false)?);
            }
        }
        concat_nonempty(parts)
    }

    /// `u(t, ·)` on `[0, L]`.
    pub fn slice(&self, t: f64) -> Result<PiecewiseConstFn> {
        if !(0.0..=self.horizon + 1e-12).contains(&t) {
            return Err(Error::OutOfDomain { t, x: 0.0 });
        }
        let t = t.min(self.horizon);
        let fams = (0..self.n).map(|i| self.family_slice(i, t)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&PiecewiseConstFn> = fams.iter().collect();
        PiecewiseConstFn::combine(&refs, |v| {
            let w = DVector::from_iterator(self.n, v.iter().map(|x| x[0]));
            &self.center + &self.right * w
        })
    }
}

/// Cell averages of `f` on a uniform grid of `cells` cells.
fn cell_averages(f: &PiecewiseConstFn, cells: usize) -> Vec<State> {
    let (a, b) = f.domain();
    let dx = (b - a) / cells as f64;
    let mut out = vec![DVector::zeros(f.dim()); cells];
    for (lo, hi, v) in f.cells() {
        let j0 = (((lo - a) / dx).floor() as usize).min(cells - 1);
        let j1 = (((hi - a) / dx).ceil() as usize).min(cells);
        for (j, acc) in out.iter_mut().enumerate().take(j1).skip(j0) {
            let cl = a + j as f64 * dx;
            let w = (hi.min(cl + dx) - lo.max(cl)).max(0.0);
            if w > 0.0 {
                *acc += v * (w / dx);
            }
        }
    }
    out
}

struct Fv<'a> {
    sys: &'a SystemDef,
    q: DMatrix<f64>,
    r_pos: DMatrix<f64>,
    r_neg: DMatrix<f64>,
    identity_h: bool,
}

impl Fv<'_> {
    fn flux(&self, hl: &State, gl: &State, hr: &State, gr: &State) -> State {
        (gl + gr) * 0.5 - &self.q * (hr - hl) * 0.5
    }

    /// Ghost state `u + R δ` with `b(u + R δ) = g`.
    fn ghost(&self, b: &SmoothMap, g: &State, u: &State, r: &DMatrix<f64>) -> Result<State> {
        let mut v = u.clone();
        for _ in 0..20 {
            let defect = b.eval(&v) - g;
            if defect.norm() <= 1e-14 {
                break;
            }
            let jac = b.jacobian(&v, self.sys.fd_step()) * r;
            let d = jac.lu().solve(&defect).ok_or(Error::BadBoundaryMap { cond: f64::INFINITY })?;
            v -= r * d;
        }
        Ok(v)
    }

    fn to_state(&self, w: &State, guess: &State) -> Result<State> {
        if self.identity_h {
            return Ok(w.clone());
        }
        let mut u = guess.clone();
        for _ in 0..30 {
            let defect = self.sys.eval_h(&u) - w;
            if defect.norm() <= 1e-14 {
                return Ok(u);
            }
            let d = self.sys.dh(&u).lu().solve(&defect).ok_or(Error::SingularDH { det: 0.0 })?;
            u -= d;
        }
        Err(Error::NoConvergence { residual: (self.sys.eval_h(&u) - w).norm() })
    }
}

/// First-order finite volumes on `cells` cells with numerical flux
/// `½(G(u_L) + G(u_R)) − ½ Q (H(u_R) − H(u_L))`, where `Q` has the eigenvectors
/// of the flux Jacobian at the ball center and eigenvalues `max_ball |λᵢ|`.
/// Walls use ghost states moved along the incoming eigenvectors at the center.
/// Returns the cell values at each of `times` (sorted ascending).
pub fn godunov(
    sys: &SystemDef,
    data: &IbvpData,
    cells: usize,
    cfl: f64,
    times: &[f64],
) -> Result<Vec<PiecewiseConstFn>> {
    if cells == 0 || !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidArgument("finite volumes need cells > 0 and 0 < cfl <= 1".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be sorted".into()));
    }
    let (n, m) = (sys.n(), sys.m());
    let c = sys.center();
    let sd = sys.eigen(c)?;
    let st = sys.ball_stats();
    let dh_c = sys.dh(c);
    let rw = &dh_c * &sd.right;
    let rw_inv = rw.clone().try_inverse().ok_or(Error::SingularDH { det: 0.0 })?;
    let speeds = DVector::from_iterator(n, (0..n).map(|i| st.lambda_min[i].abs().max(st.lambda_max[i].abs())));
    let q = &rw * DMatrix::from_diagonal(&speeds) * rw_inv;
    let identity_h = sys.h_is_identity();
    let fv = Fv {
        sys,
        q,
        r_pos: sd.right.columns(m, n - m).into_owned(),
        r_neg: sd.right.columns(0, m).into_owned(),
        identity_h,
    };
    let len = data.initial.domain().1;
    let dx = len / cells as f64;
    let dt_max = cfl * dx / st.sup_abs.max(1e-300);
    let mut w: Vec<State> = cell_averages(&data.initial.map(|u| sys.eval_h(u)), cells);
    let mut u: Vec<State> = cell_averages(&data.initial, cells);
    for j in 0..cells {
        u[j] = fv.to_state(&w[j], &u[j])?;
    }
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    let mut fluxes = vec![DVector::zeros(n); cells + 1];
    for &target in times {
        while t < target - 1e-15 {
            let dt = dt_max.min(target - t);
            let hs: Vec<State> = u.iter().map(|v| sys.eval_h(v)).collect();
            let gs: Vec<State> = u.iter().map(|v| sys.eval_g(v)).collect();
            let ul = fv.ghost(sys.b1(), data.g1.eval(t), &u[0], &fv.r_pos)?;
            let ur = fv.ghost(sys.b2(), data.g2.eval(t), &u[cells - 1], &fv.r_neg)?;
            fluxes[0] = fv.flux(&sys.eval_h(&ul), &sys.eval_g(&ul), &hs[0], &gs[0]);
            for j in 1..cells {
                fluxes[j] = fv.flux(&hs[j - 1], &gs[j - 1], &hs[j], &gs[j]);
            }
            fluxes[cells] = fv.flux(&hs[cells - 1], &gs[cells - 1], &sys.eval_h(&ur), &sys.eval_g(&ur));
            let ratio = dt / dx;
            for j in 0..cells {
                w[j] -= (&fluxes[j + 1] - &fluxes[j]) * ratio;
                u[j] = fv.to_state(&w[j], &u[j])?;
            }
            t += dt;
        }
        let breaks = (1..cells).map(|j| j as f64 * dx).collect();
        out.push(PiecewiseConstFn::new(0.0, len, breaks, u.clone())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
