use std::fmt::Write as _;

use crate::bvfun::{PiecewiseConstFn, SmallnessBudget};
use crate::error::{Error, Result};
use crate::riemann::rh_residual;
use crate::systems::SystemDef;
use crate::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontKind {
    Physical { family: usize, group: usize },
    NonPhysical,
}

impl FrontKind {
    pub fn family(&self) -> Option<usize> {
        match self {
            FrontKind::Physical { family, .. } => Some(*family),
            FrontKind::NonPhysical => None,
        }
    }
}

/// A front over its whole lifetime `[t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: u64,
    pub kind: FrontKind,
    pub t0: f64,
    pub x0: f64,
    pub t1: f64,
    pub x1: f64,
    pub speed: f64,
    pub u_l: State,
    pub u_r: State,
    /// Physical: amplitudes of the group's families. Non-physical: the jump.
    pub amplitude: Vec<f64>,
    pub generation: u32,
}

impl Segment {
    pub fn x_at(&self, t: f64) -> f64 {
        self.x0 + self.speed * (t - self.t0)
    }

    pub fn is_nonphysical(&self) -> bool {
        self.kind == FrontKind::NonPhysical
    }

    pub fn jump(&self) -> f64 {
        (&self.u_r - &self.u_l).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Start,
    Crossing { left: u64, right: u64, accurate: bool },
    WallHit { right_wall: bool, front: u64 },
    DataJump { right_wall: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub kind: EventKind,
    pub emitted: usize,
    /// Total non-physical strength after the event.
    pub np_total: f64,
}

/// Front and clause residuals of one run.
#[derive(Debug, Clone, Default)]
pub struct Compliance {
    pub max_rh: f64,
    pub max_speed_dev: f64,
    pub max_np_total: f64,
    pub np_speed_dev: f64,
    pub initial_l1: f64,
    pub left_l1: f64,
    pub right_l1: f64,
    pub fronts: usize,
}

impl Compliance {
    pub fn passes(&self, eps: f64, tol_rh: f64) -> bool {
        self.max_rh <= tol_rh
            && self.max_speed_dev <= tol_rh
            && self.max_np_total <= eps
            && self.np_speed_dev == 0.0
            && self.initial_l1 <= eps
            && self.left_l1 <= eps
            && self.right_l1 <= eps
    }

    /// Componentwise maximum.
    pub fn merge(&self, o: &Compliance) -> Compliance {
        Compliance {
            max_rh: self.max_rh.max(o.max_rh),
            max_speed_dev: self.max_speed_dev.max(o.max_speed_dev),
            max_np_total: self.max_np_total.max(o.max_np_total),
            np_speed_dev: self.np_speed_dev.max(o.np_speed_dev),
            initial_l1: self.initial_l1.max(o.initial_l1),
            left_l1: self.left_l1.max(o.left_l1),
            right_l1: self.right_l1.max(o.right_l1),
            fronts: self.fronts + o.fronts,
        }
    }
}

/// Output of one tracker run in its own (native) coordinates `(τ, y) ∈ [0, T] × [0, L]`.
#[derive(Debug, Clone)]
pub struct TrackerRun {
    pub length: f64,
    pub horizon: f64,
    pub epsilon: f64,
    pub lambda_hat: f64,
    /// Sorted by `(t0, id)`.
    pub segments: Vec<Segment>,
    pub events: Vec<Event>,
    pub initial: PiecewiseConstFn,
    pub g1: PiecewiseConstFn,
    pub g2: PiecewiseConstFn,
    pub left_trace: PiecewiseConstFn,
    pub right_trace: PiecewiseConstFn,
    pub max_np: f64,
    pub budget: SmallnessBudget,
}

impl TrackerRun {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        length: f64,
        horizon: f64,
        epsilon: f64,
        lambda_hat: f64,
        mut segments: Vec<Segment>,
        events: Vec<Event>,
        initial: PiecewiseConstFn,
        g1: PiecewiseConstFn,
        g2: PiecewiseConstFn,
        left_trace: PiecewiseConstFn,
        right_trace: PiecewiseConstFn,
        max_np: f64,
        budget: SmallnessBudget,
    ) -> Self {
        segments.sort_by(|a, b| a.t0.total_cmp(&b.t0).then(a.id.cmp(&b.id)));
        TrackerRun {
            length,
            horizon,
            epsilon,
            lambda_hat,
            segments,
            events,
            initial,
            g1,
            g2,
            left_trace,
            right_trace,
            max_np,
            budget,
        }
    }

    pub fn physical_count(&self) -> usize {
        self.segments.iter().filter(|s| !s.is_nonphysical()).count()
    }

    /// `u(τ, ·)` on `[0, L]`.
    pub fn sample(&self, tau: f64) -> Result<PiecewiseConstFn> {
        if !(tau >= 0.0 && tau <= self.horizon) {
            return Err(Error::OutOfDomain { t: tau, x: 0.0 });
        }
        let at_end = tau >= self.horizon;
        let mut live: Vec<(f64, f64, &Segment)> = self
            .segments
            .iter()
            .filter(|s| s.t0 <= tau && (tau < s.t1 || (at_end && s.t1 >= self.horizon)))
            .map(|s| (s.x_at(tau).clamp(0.0, self.length), s.speed, s))
            .collect();
        if live.is_empty() {
            let u = self.left_trace.eval(tau.min(self.horizon)).clone();
            return PiecewiseConstFn::constant(0.0, self.length, u);
        }
        live.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        // fronts meeting exactly at τ keep the order they had while both were alive
        let tol = 1e-12 * self.length.max(1.0);
        let mut lo = 0;
        while lo < live.len() {
            let mut hi = lo + 1;
            while hi < live.len() && live[hi].0 - live[hi - 1].0 <= tol {
                hi += 1;
            }
            if hi - lo > 1 {
                let t_ref = live[lo..hi].iter().map(|l| l.2.t0).fold(f64::NEG_INFINITY, f64::max);
                live[lo..hi].sort_by(|a, b| a.2.x_at(t_ref).total_cmp(&b.2.x_at(t_ref)).then(a.1.total_cmp(&b.1)));
            }
            lo = hi;
        }
        let breaks = live
            .iter()
            .scan(f64::NEG_INFINITY, |m, l| {
                *m = m.max(l.0);
                Some(*m)
            })
            .collect();
        let mut values = Vec::with_capacity(live.len() + 1);
        values.push(live[0].2.u_l.clone());
        values.extend(live.iter().map(|l| l.2.u_r.clone()));
        PiecewiseConstFn::new(0.0, self.length, breaks, values)
    }

    /// `u(·, y)` on `[0, T]`.
    pub fn history(&self, y: f64) -> Result<PiecewiseConstFn> {
        if !(y >= 0.0 && y <= self.length) {
            return Err(Error::OutOfDomain { t: 0.0, x: y });
        }
        if y <= 0.0 {
            return Ok(self.left_trace.clone());
        }
        if y >= self.length {
            return Ok(self.right_trace.clone());
        }
        let mut hits: Vec<(f64, f64, &Segment)> = Vec::new();
        for s in &self.segments {
            let tc = if s.speed == 0.0 {
                if s.x0 == y { s.t0 } else { continue }
            } else {
                s.t0 + (y - s.x0) / s.speed
            };
            let born_here = s.x0 == y;
            let tc = if born_here { s.t0 } else { tc };
            if tc >= s.t0 && tc < s.t1 && tc < self.horizon {
                hits.push((tc, s.speed.abs(), s));
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let breaks = hits.iter().map(|h| h.0).collect();
        let mut values = Vec::with_capacity(hits.len() + 1);
        values.push(self.initial.eval(y).clone());
        for (_, _, s) in &hits {
            values.push(if s.speed > 0.0 { s.u_l.clone() } else { s.u_r.clone() });
        }
        PiecewiseConstFn::new(0.0, self.horizon, breaks, values)
    }

    pub fn final_state(&self) -> Result<PiecewiseConstFn> {
        self.sample(self.horizon)
    }

    /// Residuals of the run as an ε-solution of `sys` with the run's own data.
    pub fn compliance(&self, sys: &SystemDef) -> Result<Compliance> {
        let mut c = Compliance { fronts: self.segments.len(), ..Default::default() };
        for s in &self.segments {
            match s.kind {
                FrontKind::Physical { family, .. } => {
                    c.max_rh = c.max_rh.max(rh_residual(sys, &s.u_l, &s.u_r, s.speed));
                    let lam = sys.lambda(family, &s.u_l)?;
                    c.max_speed_dev = c.max_speed_dev.max((s.speed - lam).abs());
                }
                FrontKind::NonPhysical => {
                    c.np_speed_dev = c.np_speed_dev.max((s.speed - self.lambda_hat).abs());
                }
            }
        }
        c.max_np_total = self.max_np;
        c.initial_l1 = self.sample(0.0)?.l1_dist(&self.initial)?;
        let bl = self.left_trace.map(|u| sys.b1().eval(u));
        let br = self.right_trace.map(|u| sys.b2().eval(u));
        c.left_l1 = bl.l1_dist(&self.g1)?;
        c.right_l1 = br.l1_dist(&self.g2)?;
        Ok(c)
    }

    /// Maximum total non-physical strength over all times, recomputed from segments.
    pub fn np_total_profile_max(&self) -> f64 {
        let mut times: Vec<f64> = self.segments.iter().filter(|s| s.is_nonphysical()).map(|s| s.t0).collect();
        times.sort_by(f64::total_cmp);
        times
            .iter()
            .map(|&t| {
                self.segments
                    .iter()
                    .filter(|s| s.is_nonphysical() && s.t0 <= t && t < s.t1)
                    .map(Segment::jump)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Event log as text; identical inputs give identical logs.
    pub fn event_log(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            writeln!(s, "{:?} {:?} {:?} {} {:?}", e.t, e.x, e.kind, e.emitted, e.np_total).unwrap();
        }
        s
    }
}
