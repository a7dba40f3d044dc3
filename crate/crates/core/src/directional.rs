//! Exchanging the roles of `t` and `x`.
//!
//! The rightward problem reads `∂ₓG(u) + ∂ₜH(u) = 0` with `x` as time; the leftward
//! one runs `x` from the right wall down, i.e. `∂_τ(−G(u)) + ∂ₜH(u) = 0` with
//! `τ = x_hi − x`. Backward runs are forward runs of `(H, −G)` in `τ = t_hi − t`.
//! All of them are solved by the same tracker on an effective system and placed
//! back in base coordinates through an [`AxisMap`].

use std::ops::Range;

use crate::bvfun::PiecewiseConstFn;
use crate::error::{Error, Result};
use crate::systems::{Multiplicity, SmoothMap, SystemDef, SystemParts};
use crate::tracker::{evolve, AxisMap, FrontSolution, Orientation, Piece, TrackerConfig};

/// Family bookkeeping of an effective system relative to its base.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMap {
    /// `base_of[j]` is the base family playing the role of effective family `j`.
    pub base_of: Vec<usize>,
    pub m: usize,
    pub mult: Multiplicity,
}

/// Effective eigenvalue as a function of the base one.
fn effective_speed(o: Orientation, lam: f64) -> f64 {
    match o {
        Orientation::Forward => lam,
        Orientation::Backward => -lam,
        Orientation::Rightward => 1.0 / lam,
        Orientation::Leftward => -1.0 / lam,
    }
}

/// Orders base families by their effective speed at the center.
pub fn family_map(base: &SystemDef, o: Orientation) -> Result<FamilyMap> {
    let n = base.n();
    let lam = base.eigen(base.center())?.lambdas;
    let mu: Vec<f64> = lam.iter().map(|&l| effective_speed(o, l)).collect();
    let mut base_of: Vec<usize> = (0..n).collect();
    // stable within the multiple block, which keeps its internal order
    base_of.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]));
    let m = mu.iter().filter(|&&v| v < 0.0).count();
    let Multiplicity { k, p } = base.mult();
    let mult = if p > 1 {
        let start = base_of.iter().position(|&j| j >= k && j < k + p).expect("block is present");
        Multiplicity { k: start, p }
    } else {
        Multiplicity::SIMPLE
    };
    Ok(FamilyMap { base_of, m, mult })
}

/// The conservation law solved by an orientation, with boundary maps `b1` (native
/// left wall, `n − m'` components) and `b2` (native right wall, `m'` components).
pub fn effective_system(base: &SystemDef, o: Orientation, b1: SmoothMap, b2: SmoothMap) -> Result<SystemDef> {
    if o == Orientation::Forward {
        return base.with_boundary(b1, b2);
    }
    let fm = family_map(base, o)?;
    let (h, g) = match o {
        Orientation::Forward => unreachable!(),
        Orientation::Backward => (base.h().clone(), base.g().negated()),
        Orientation::Rightward => (base.g().clone(), base.h().clone()),
        Orientation::Leftward => (base.g().negated(), base.h().clone()),
    };
    if matches!(o, Orientation::Rightward | Orientation::Leftward) {
        let dg = base.dg(base.center());
        let scale = dg.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
        let det = dg.determinant();
        if det.abs() <= 1e-12 * scale.powi(base.n() as i32) {
            return Err(Error::SingularDG { det });
        }
    }
    let anchors = base.anchors();
    SystemDef::from_parts(SystemParts {
        name: format!("{}:{o}", base.name()),
        n: base.n(),
        m: fm.m,
        mult: fm.mult,
        h,
        g,
        center: base.center().clone(),
        r_ball: base.r_ball(),
        b1,
        b2,
        entropy: None,
        anchors: Some(fm.base_of.iter().map(|&j| anchors[j].clone()).collect()),
    })
}

/// `u ↦ lᵢ·(u − c)` for the base families `i ∈ families`, with `lᵢ` frozen at the center `c`.
pub fn eigen_forms(base: &SystemDef, families: Range<usize>) -> Result<SmoothMap> {
    let sd = base.eigen(base.center())?;
    let rows = sd.left.rows(families.start, families.len()).into_owned();
    Ok(SmoothMap::affine_forms(rows, base.center()))
}

/// Negative base families `1..m` and positive ones `m+1..n`.
pub fn negative_families(base: &SystemDef) -> Range<usize> {
    0..base.m()
}

pub fn positive_families(base: &SystemDef) -> Range<usize> {
    base.m()..base.n()
}

/// Rightward system `(G, H)` with the left-eigenvector forms as boundary maps:
/// positive families at `t = 0`, negative ones at `t = T`.
pub fn transpose_system(base: &SystemDef) -> Result<SystemDef> {
    let b1 = eigen_forms(base, positive_families(base))?;
    let b2 = eigen_forms(base, negative_families(base))?;
    effective_system(base, Orientation::Rightward, b1, b2)
}

/// A base system together with the orientation in which it is solved.
#[derive(Debug, Clone)]
pub struct OrientedProblem {
    pub base: SystemDef,
    pub effective: SystemDef,
    pub axes: AxisMap,
}

impl OrientedProblem {
    pub fn new(base: &SystemDef, axes: AxisMap, b1: SmoothMap, b2: SmoothMap) -> Result<Self> {
        if !(axes.t_hi > axes.t_lo && axes.x_hi > axes.x_lo) {
            return Err(Error::EmptyDomain { a: axes.t_lo, b: axes.t_hi });
        }
        let effective = effective_system(base, axes.orientation, b1, b2)?;
        Ok(OrientedProblem { base: base.clone(), effective, axes })
    }

    pub fn orientation(&self) -> Orientation {
        self.axes.orientation
    }

    /// Native initial data from base data on the initial edge of the native domain.
    pub fn native_initial(&self, f: &PiecewiseConstFn) -> Result<PiecewiseConstFn> {
        let len = self.axes.native_length();
        f.reparametrize(0.0, len, false)
    }

    /// Native boundary data from base data on a boundary edge. Backward and leftward
    /// runs traverse their time axis in reverse.
    pub fn native_boundary(&self, g: &PiecewiseConstFn) -> Result<PiecewiseConstFn> {
        let h = self.axes.native_horizon();
        let reverse = matches!(self.axes.orientation, Orientation::Backward | Orientation::Leftward);
        g.reparametrize(0.0, h, reverse)
    }
}

/// Runs the tracker on the effective system. `initial`, `g1`, `g2` are native:
/// `initial` on `[0, native length]`, `g1`, `g2` on `[0, native horizon]`.
pub fn solve_oriented(
    problem: &OrientedProblem,
    initial: &PiecewiseConstFn,
    g1: &PiecewiseConstFn,
    g2: &PiecewiseConstFn,
    cfg: &TrackerConfig,
) -> Result<FrontSolution> {
    let run = evolve(&problem.effective, initial, g1, g2, problem.axes.native_horizon(), cfg)?;
    Ok(FrontSolution::single(
        problem.base.clone(),
        Piece { run, sys: problem.effective.clone(), axes: problem.axes },
    ))
}

/// Default weld tolerance `5ε`.
pub fn glue_tol(eps: f64) -> f64 {
    5.0 * eps
}

/// Joins two solutions sharing the interface `x = left.x_span.1 = right.x_span.0`.
/// The interface traces must agree within `tol` in `L¹(t)`; the mismatch is recorded
/// as `weld_mass`.
pub fn glue(left: FrontSolution, right: FrontSolution, tol: f64) -> Result<FrontSolution> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    if !close(left.t_span.0, right.t_span.0) || !close(left.t_span.1, right.t_span.1) {
        return Err(Error::DomainMismatch {
            a0: left.t_span.0,
            b0: left.t_span.1,
            a1: right.t_span.0,
            b1: right.t_span.1,
        });
    }
    if !close(left.x_span.1, right.x_span.0) {
        return Err(Error::DomainMismatch {
            a0: left.x_span.0,
            b0: left.x_span.1,
            a1: right.x_span.0,
            b1: right.x_span.1,
        });
    }
    let distance = left.trace_right()?.l1_dist(&right.trace_left()?)?;
    if distance > tol {
        return Err(Error::InterfaceMismatch { distance, tol });
    }
    let mut pieces = left.pieces;
    pieces.extend(right.pieces);
    Ok(FrontSolution {
        base: left.base,
        t_span: left.t_span,
        x_span: (left.x_span.0, right.x_span.1),
        epsilon: left.epsilon + right.epsilon,
        pieces,
        weld_mass: left.weld_mass + right.weld_mass + distance,
    })
}

/// Which vertical edge of a right triangle carries the apex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    Left,
    Right,
}

/// Right triangle with its base on `t = t_base` spanning `[x_lo, x_hi]` and its apex
/// at `(t_apex, x_lo)` (left corner) or `(t_apex, x_hi)` (right corner).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub t_base: f64,
    pub t_apex: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub corner: Corner,
}

impl Triangle {
    /// `𝔏(x₁)`: data on `(x_lo, x_lo + x₁)` and the left wall; apex at `x₁ / max|λ₁|`.
    pub fn left_dependence(sys: &SystemDef, x_lo: f64, x1: f64) -> Triangle {
        let speed = sys.ball_stats().lambda_min[0].abs();
        Triangle { t_base: 0.0, t_apex: x1 / speed, x_lo, x_hi: x_lo + x1, corner: Corner::Left }
    }

    /// `ℜ(x₀)`: data on `(x₀, x_hi)` and the right wall; apex at `(x_hi − x₀) / max λₙ`.
    pub fn right_dependence(sys: &SystemDef, x0: f64, x_hi: f64) -> Triangle {
        let speed = sys.ball_stats().lambda_max[sys.n() - 1];
        Triangle { t_base: 0.0, t_apex: (x_hi - x0) / speed, x_lo: x0, x_hi, corner: Corner::Right }
    }

    /// The `x`-interval at time `t`, if `t` lies strictly between base and apex.
    pub fn slice(&self, t: f64) -> Option<(f64, f64)> {
        let s = (t - self.t_base) / (self.t_apex - self.t_base);
        if !(s >= 0.0 && s < 1.0) {
            return None;
        }
        let w = (self.x_hi - self.x_lo) * (1.0 - s);
        Some(match self.corner {
            Corner::Left => (self.x_lo, self.x_lo + w),
            Corner::Right => (self.x_hi - w, self.x_hi),
        })
    }
}

#[derive(Debug, Clone)]
pub struct TriangleReport {
    pub triangle: Triangle,
    /// `(t, ‖a(t,·) − b(t,·)‖_{L¹} on the slice)`.
    pub profile: Vec<(f64, f64)>,
    pub max_distance: f64,
}

/// Slice-wise `L¹` distance of two solutions on `tri`, at `slices` interior times.
pub fn determinate_triangle(
    a: &FrontSolution,
    b: &FrontSolution,
    tri: &Triangle,
    slices: usize,
) -> Result<TriangleReport> {
    if slices == 0 {
        return Err(Error::InvalidArgument("at least one slice is required".into()));
    }
    let inside = |s: &FrontSolution| {
        let (tl, th) = (tri.t_base.min(tri.t_apex), tri.t_base.max(tri.t_apex));
        tl >= s.t_span.0 - 1e-12
            && th <= s.t_span.1 + 1e-12
            && tri.x_lo >= s.x_span.0 - 1e-12
            && tri.x_hi <= s.x_span.1 + 1e-12
    };
    if !inside(a) || !inside(b) {
        return Err(Error::OutOfDomain { t: tri.t_apex, x: tri.x_lo });
    }
    let mut profile = Vec::with_capacity(slices);
    for k in 0..slices {
        let t = tri.t_base + (k as f64 + 0.5) / slices as f64 * (tri.t_apex - tri.t_base);
        let Some((lo, hi)) = tri.slice(t) else { continue };
        let fa = a.sample(t)?.restrict(lo, hi)?;
        let fb = b.sample(t)?.restrict(lo, hi)?;
        profile.push((t, fa.l1_dist(&fb)?));
    }
    let max_distance = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(TriangleReport { triangle: *tri, profile, max_distance })
}

/// Largest Rankine–Hugoniot residual of the physical fronts of `sol` read as fronts
/// of `effective` in orientation `o`: a base front of speed `s` has native speed
/// `effective_speed(o, s)`.
pub fn reoriented_rh(sol: &FrontSolution, effective: &SystemDef, o: Orientation) -> f64 {
    let mut worst = 0.0f64;
    for p in &sol.pieces {
        for s in p.run.segments.iter().filter(|s| !s.is_nonphysical()) {
            let (ta, xa) = p.axes.to_base(s.t0, s.x0);
            let (tb, xb) = p.axes.to_base(s.t1, s.x1);
            if tb == ta {
                continue;
            }
            let base_speed = (xb - xa) / (tb - ta);
            let mu = effective_speed(o, base_speed);
            worst = worst.max(crate::riemann::rh_residual(effective, &s.u_l, &s.u_r, mu));
        }
    }
    worst
}

/// Constant `b(c)` data on `[0, len]` for a map `b`.
#[cfg(test)]
pub(crate) fn constant_data(b: &SmoothMap, u: &crate::State, len: f64) -> Result<PiecewiseConstFn> {
    PiecewiseConstFn::constant(0.0, len, b.eval(u))
}
