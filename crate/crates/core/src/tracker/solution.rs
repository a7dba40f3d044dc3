use std::fmt;
use std::fmt::Write as _;

use super::run::{Compliance, FrontKind, TrackerRun};
use crate::bvfun::PiecewiseConstFn;
use crate::error::{Error, Result};
use crate::systems::SystemDef;
use crate::State;

/// Which physical axis plays the role of time in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `t` increasing.
    Forward,
    /// `t` decreasing from the final time.
    Backward,
    /// `x` increasing from the left wall.
    Rightward,
    /// `x` decreasing from the right wall.
    Leftward,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Forward => "forward",
            Orientation::Backward => "backward",
            Orientation::Rightward => "rightward",
            Orientation::Leftward => "leftward",
        })
    }
}

/// Affine identification of a run's native rectangle with the base rectangle
/// `[t_lo, t_hi] × [x_lo, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMap {
    pub orientation: Orientation,
    pub t_lo: f64,
    pub t_hi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl AxisMap {
    pub fn new(orientation: Orientation, t: (f64, f64), x: (f64, f64)) -> Self {
        AxisMap { orientation, t_lo: t.0, t_hi: t.1, x_lo: x.0, x_hi: x.1 }
    }

    fn sideways(&self) -> bool {
        matches!(self.orientation, Orientation::Rightward | Orientation::Leftward)
    }

    /// Native horizon (extent of the time-like axis).
    pub fn native_horizon(&self) -> f64 {
        if self.sideways() { self.x_hi - self.x_lo } else { self.t_hi - self.t_lo }
    }

    /// Native length (extent of the space-like axis).
    pub fn native_length(&self) -> f64 {
        if self.sideways() { self.t_hi - self.t_lo } else { self.x_hi - self.x_lo }
    }

    /// Native `(τ, y)` to base `(t, x)`.
    pub fn to_base(&self, tau: f64, y: f64) -> (f64, f64) {
        match self.orientation {
            Orientation::Forward => (self.t_lo + tau, self.x_lo + y),
            Orientation::Backward => (self.t_hi - tau, self.x_lo + y),
            Orientation::Rightward => (self.t_lo + y, self.x_lo + tau),
            Orientation::Leftward => (self.t_lo + y, self.x_hi - tau),
        }
    }

    /// Base `(t, x)` to native `(τ, y)`.
    pub fn to_native(&self, t: f64, x: f64) -> (f64, f64) {
        match self.orientation {
            Orientation::Forward => (t - self.t_lo, x - self.x_lo),
            Orientation::Backward => (self.t_hi - t, x - self.x_lo),
            Orientation::Rightward => (x - self.x_lo, t - self.t_lo),
            Orientation::Leftward => (self.x_hi - x, t - self.t_lo),
        }
    }
}

/// One tracker run placed in base coordinates.
#[derive(Debug, Clone)]
pub struct Piece {
    pub run: TrackerRun,
    /// The system the run actually solved.
    pub sys: SystemDef,
    pub axes: AxisMap,
}

/// A front in base coordinates with `t0 ≤ t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSegment {
    pub id: u64,
    pub piece: usize,
    pub kind: FrontKind,
    pub t0: f64,
    pub x0: f64,
    pub t1: f64,
    pub x1: f64,
    /// State on the side of smaller `x`.
    pub left: State,
    /// State on the side of larger `x`.
    pub right: State,
}

impl BaseSegment {
    pub fn is_nonphysical(&self) -> bool {
        self.kind == FrontKind::NonPhysical
    }
}

impl Piece {
    pub fn covers(&self, t: f64) -> bool {
        t >= self.axes.t_lo - 1e-12 && t <= self.axes.t_hi + 1e-12
    }

    /// `u(t, ·)` on `[x_lo, x_hi]`.
    pub fn sample_base(&self, t: f64) -> Result<PiecewiseConstFn> {
        let a = &self.axes;
        if !self.covers(t) {
            return Err(Error::OutOfDomain { t, x: a.x_lo });
        }
        let (xl, xh) = (a.x_lo, a.x_hi);
        match a.orientation {
            Orientation::Forward => self
                .run
                .sample((t - a.t_lo).clamp(0.0, self.run.horizon))?
                .reparametrize(xl, xh, false),
            Orientation::Backward => self
                .run
                .sample((a.t_hi - t).clamp(0.0, self.run.horizon))?
                .reparametrize(xl, xh, false),
            Orientation::Rightward => self
                .run
                .history((t - a.t_lo).clamp(0.0, self.run.length))?
                .reparametrize(xl, xh, false),
            Orientation::Leftward => self
                .run
                .history((t - a.t_lo).clamp(0.0, self.run.length))?
                .reparametrize(xl, xh, true),
        }
    }

    /// `u(·, x_lo+)` on `[t_lo, t_hi]`.
    pub fn trace_lo(&self) -> Result<PiecewiseConstFn> {
        let a = &self.axes;
        match a.orientation {
            Orientation::Forward => self.run.left_trace.reparametrize(a.t_lo, a.t_hi, false),
            Orientation::Backward => self.run.left_trace.reparametrize(a.t_lo, a.t_hi, true),
            Orientation::Rightward => self.run.initial.reparametrize(a.t_lo, a.t_hi, false),
            Orientation::Leftward => self.run.final_state()?.reparametrize(a.t_lo, a.t_hi, false),
        }
    }

    /// `u(·, x_hi−)` on `[t_lo, t_hi]`.
    pub fn trace_hi(&self) -> Result<PiecewiseConstFn> {
        let a = &self.axes;
        match a.orientation {
            Orientation::Forward => self.run.right_trace.reparametrize(a.t_lo, a.t_hi, false),
            Orientation::Backward => self.run.right_trace.reparametrize(a.t_lo, a.t_hi, true),
            Orientation::Rightward => self.run.final_state()?.reparametrize(a.t_lo, a.t_hi, false),
            Orientation::Leftward => self.run.initial.reparametrize(a.t_lo, a.t_hi, false),
        }
    }

    pub fn base_segments(&self, piece: usize) -> Vec<BaseSegment> {
        let a = &self.axes;
        self.run
            .segments
            .iter()
            .filter(|s| s.t1 > s.t0)
            .map(|s| {
                let (ta, xa) = a.to_base(s.t0, s.x0);
                let (tb, xb) = a.to_base(s.t1, s.x1);
                let (left, right) = match a.orientation {
                    Orientation::Forward | Orientation::Backward => (s.u_l.clone(), s.u_r.clone()),
                    Orientation::Rightward => {
                        if s.speed > 0.0 { (s.u_r.clone(), s.u_l.clone()) } else { (s.u_l.clone(), s.u_r.clone()) }
                    }
                    Orientation::Leftward => {
                        if s.speed > 0.0 { (s.u_l.clone(), s.u_r.clone()) } else { (s.u_r.clone(), s.u_l.clone()) }
                    }
                };
                let ((t0, x0), (t1, x1)) = if ta <= tb { ((ta, xa), (tb, xb)) } else { ((tb, xb), (ta, xa)) };
                BaseSegment { id: s.id, piece, kind: s.kind, t0, x0, t1, x1, left, right }
            })
            .collect()
    }
}

/// An approximate solution on `[t_lo, t_hi] × [x_lo, x_hi]` assembled from one or
/// more runs whose `x`-ranges tile the domain.
#[derive(Debug, Clone)]
pub struct FrontSolution {
    pub base: SystemDef,
    pub t_span: (f64, f64),
    pub x_span: (f64, f64),
    pub epsilon: f64,
    /// Sorted by `x_lo`.
    pub pieces: Vec<Piece>,
    /// `L¹` mismatch of interface traces accepted when gluing.
    pub weld_mass: f64,
}

impl FrontSolution {
    pub fn single(base: SystemDef, piece: Piece) -> Self {
        let a = piece.axes;
        FrontSolution {
            base,
            t_span: (a.t_lo, a.t_hi),
            x_span: (a.x_lo, a.x_hi),
            epsilon: piece.run.epsilon,
            pieces: vec![piece],
            weld_mass: 0.0,
        }
    }

    /// Forward run of the base system on `[0, T] × [0, L]`.
    pub fn forward(base: SystemDef, run: TrackerRun) -> Self {
        let axes = AxisMap::new(Orientation::Forward, (0.0, run.horizon), (0.0, run.length));
        Self::single(base.clone(), Piece { run, sys: base, axes })
    }

    pub fn horizon(&self) -> f64 {
        self.t_span.1 - self.t_span.0
    }

    pub fn length(&self) -> f64 {
        self.x_span.1 - self.x_span.0
    }

    /// `u(t, ·)` on the full `x`-range.
    pub fn sample(&self, t: f64) -> Result<PiecewiseConstFn> {
        if !(t >= self.t_span.0 - 1e-12 && t <= self.t_span.1 + 1e-12) {
            return Err(Error::OutOfDomain { t, x: self.x_span.0 });
        }
        let t = t.clamp(self.t_span.0, self.t_span.1);
        let parts = self.pieces.iter().map(|p| p.sample_base(t)).collect::<Result<Vec<_>>>()?;
        if parts.len() == 1 {
            return Ok(parts.into_iter().next().unwrap());
        }
        PiecewiseConstFn::concat(&parts)
    }

    /// Evaluates `u(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> Result<State> {
        if !(x >= self.x_span.0 && x <= self.x_span.1) {
            return Err(Error::OutOfDomain { t, x });
        }
        Ok(self.sample(t)?.eval(x).clone())
    }

    pub fn initial(&self) -> Result<PiecewiseConstFn> {
        self.sample(self.t_span.0)
    }

    pub fn final_state(&self) -> Result<PiecewiseConstFn> {
        self.sample(self.t_span.1)
    }

    /// `u(·, x_lo+)`.
    pub fn trace_left(&self) -> Result<PiecewiseConstFn> {
        self.pieces[0].trace_lo()
    }

    /// `u(·, x_hi−)`.
    pub fn trace_right(&self) -> Result<PiecewiseConstFn> {
        self.pieces.last().expect("at least one piece").trace_hi()
    }

    pub fn segments(&self) -> Vec<BaseSegment> {
        self.pieces.iter().enumerate().flat_map(|(i, p)| p.base_segments(i)).collect()
    }

    /// Largest total non-physical strength over the pieces.
    pub fn max_np(&self) -> f64 {
        self.pieces.iter().map(|p| p.run.max_np).fold(0.0, f64::max)
    }

    /// Each piece checked against its own system and data.
    pub fn compliance(&self) -> Result<Compliance> {
        let mut c = Compliance::default();
        for p in &self.pieces {
            c = c.merge(&p.run.compliance(&p.sys)?);
        }
        Ok(c)
    }

    /// `front_id,kind,family,t0,x0,t1,x1,uL...,uR...` in base coordinates, rows
    /// ordered by `(t0, front_id)`. `uL`/`uR` are the states at smaller/larger `x`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let pieces: Vec<String> = self
            .pieces
            .iter()
            .map(|p| {
                format!(
                    "{}[t={}..{},x={}..{}]",
                    p.axes.orientation, p.axes.t_lo, p.axes.t_hi, p.axes.x_lo, p.axes.x_hi
                )
            })
            .collect();
        writeln!(s, "# orientation {}", pieces.join(" ")).unwrap();
        writeln!(s, "# family indices are 1-based and refer to the system each piece solved").unwrap();
        let n = self.base.n();
        let mut header = String::from("front_id,kind,family,t0,x0,t1,x1");
        for i in 1..=n {
            write!(header, ",uL{i}").unwrap();
        }
        for i in 1..=n {
            write!(header, ",uR{i}").unwrap();
        }
        writeln!(s, "{header}").unwrap();
        let mut offset = 0u64;
        let mut rows = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            for seg in p.base_segments(i) {
                rows.push((seg.id + offset, seg));
            }
            offset += p.run.segments.iter().map(|s| s.id + 1).max().unwrap_or(0);
        }
        rows.sort_by(|a, b| a.1.t0.total_cmp(&b.1.t0).then(a.0.cmp(&b.0)));
        for (id, seg) in rows {
            let (kind, fam) = match seg.kind {
                FrontKind::Physical { family, .. } => ("physical", (family + 1).to_string()),
                FrontKind::NonPhysical => ("nonphysical", String::new()),
            };
            write!(s, "{id},{kind},{fam},{},{},{},{}", seg.t0, seg.x0, seg.t1, seg.x1).unwrap();
            for v in seg.left.iter().chain(seg.right.iter()) {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}
