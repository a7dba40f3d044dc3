//! Event-driven ε-approximate front tracking for the mixed problem
//!
//! ```text
//! ∂ₜH(u) + ∂ₓG(u) = 0,  0 < x < L, 0 < t < T,
//! u(0, x) = ū(x),  b₁(u(t, 0+)) = g₁(t),  b₂(u(t, L−)) = g₂(t).
//! ```
//!
//! Fronts are straight segments with constant states on both sides. Physical
//! fronts travel at `λ_k(u_L)` and satisfy Rankine–Hugoniot exactly up to the
//! curve-integration tolerance; non-physical fronts carry interaction residuals
//! at the constant speed `λ̂` and their total strength is kept below `ε`.

mod run;
mod solution;
mod svg;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::bvfun::{budget, PiecewiseConstFn};
use crate::error::{Error, Result};
use crate::riemann::{
    build_fan, riemann_amplitudes, solve_boundary_left, solve_boundary_right, solve_riemann,
    WaveFan, ZERO_WAVE,
};
use crate::systems::SystemDef;
use crate::State;

pub use run::{Compliance, Event, EventKind, FrontKind, Segment, TrackerRun};
pub use solution::{AxisMap, BaseSegment, FrontSolution, Orientation, Piece};
pub use svg::render_svg;

/// Knobs of the tracking engine.
#[derive(Debug, Clone)]
pub struct TrackerConfig {
    pub epsilon: f64,
    /// Interactions whose incoming generation reaches this use the simplified solver.
    pub gen_cap: u32,
    /// Interactions with `|σ_A||σ_B| < ε² ρ_simp` use the simplified solver.
    pub rho_simp: f64,
    pub front_cap: usize,
    pub event_cap: usize,
    /// Cap on the smallness functional of the data; `None` disables the check.
    pub delta: Option<f64>,
    /// States must stay inside this fraction of the working ball.
    pub ball_margin: f64,
    /// Non-physical speed; defaults to `2 sup |λᵢ|`.
    pub lambda_hat: Option<f64>,
}

impl TrackerConfig {
    pub fn new(epsilon: f64) -> Self {
        TrackerConfig {
            epsilon,
            gen_cap: 3,
            rho_simp: 1.0,
            front_cap: 1_000_000,
            event_cap: 5_000_000,
            delta: None,
            ball_margin: 0.9,
            lambda_hat: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Live {
    id: u64,
    kind: FrontKind,
    t0: f64,
    x0: f64,
    speed: f64,
    u_l: State,
    u_r: State,
    gen: u32,
    amp: Vec<f64>,
}

impl Live {
    fn x_at(&self, t: f64) -> f64 {
        self.x0 + self.speed * (t - self.t0)
    }

    fn strength(&self) -> f64 {
        match self.kind {
            FrontKind::NonPhysical => (&self.u_r - &self.u_l).norm(),
            FrontKind::Physical { .. } => self.amp.iter().map(|a| a * a).sum::<f64>().sqrt(),
        }
    }

    fn is_np(&self) -> bool {
        matches!(self.kind, FrontKind::NonPhysical)
    }

    fn group(&self) -> Option<usize> {
        match self.kind {
            FrontKind::Physical { group, .. } => Some(group),
            FrontKind::NonPhysical => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QKind {
    JumpLeft,
    JumpRight,
    Cross,
    HitLeft,
    HitRight,
}

#[derive(Debug, Clone, Copy)]
struct QEvent {
    t: f64,
    class: u8,
    x: f64,
    a: u64,
    b: u64,
    kind: QKind,
}

impl PartialEq for QEvent {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for QEvent {}
impl PartialOrd for QEvent {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for QEvent {
    // Reversed so that the max-heap pops the earliest event.
    fn cmp(&self, o: &Self) -> Ordering {
        o.t.total_cmp(&self.t)
            .then(o.class.cmp(&self.class))
            .then(o.x.total_cmp(&self.x))
            .then(o.a.cmp(&self.a))
            .then(o.b.cmp(&self.b))
    }
}

struct Engine<'a> {
    sys: &'a SystemDef,
    cfg: &'a TrackerConfig,
    length: f64,
    horizon: f64,
    lambda_hat: f64,
    alive: Vec<Live>,
    queue: BinaryHeap<QEvent>,
    segments: Vec<Segment>,
    events: Vec<Event>,
    next_id: u64,
    np_total: f64,
    max_np: f64,
    wall_left: State,
    wall_right: State,
    left_log: Vec<(f64, State)>,
    right_log: Vec<(f64, State)>,
    /// Sorted boundary-data jump times; nearby interaction times snap onto them.
    data_times: Vec<f64>,
}

/// Runs the tracker on `[0, T] × [0, L]` with `L` the length of the domain of `ubar`.
/// `g1` and `g2` live on `[0, T]`.
pub fn evolve(
    sys: &SystemDef,
    ubar: &PiecewiseConstFn,
    g1: &PiecewiseConstFn,
    g2: &PiecewiseConstFn,
    horizon: f64,
    cfg: &TrackerConfig,
) -> Result<TrackerRun> {
    let (a, b) = ubar.domain();
    if a != 0.0 {
        return Err(Error::InvalidArgument(format!("initial data must start at 0, got {a}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::EmptyDomain { a: 0.0, b: horizon });
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", cfg.epsilon)));
    }
    for g in [g1, g2] {
        let (ga, gb) = g.domain();
        if (ga - 0.0).abs() > 1e-12 || (gb - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return Err(Error::DomainMismatch { a0: 0.0, b0: horizon, a1: ga, b1: gb });
        }
    }
    if ubar.dim() != sys.n() || g1.dim() != sys.n() - sys.m() || g2.dim() != sys.m() {
        return Err(Error::InvalidArgument("data dimensions do not match the system".into()));
    }
    let bud = budget(
        ubar,
        g1,
        g2,
        &|u| sys.b1().eval(u),
        &|u| sys.b2().eval(u),
        sys.center(),
    );
    if let Some(delta) = cfg.delta {
        if bud.total > delta {
            return Err(Error::BudgetExceeded { total: bud.total, cap: delta });
        }
    }
    let lambda_hat = cfg.lambda_hat.unwrap_or_else(|| sys.lambda_hat());
    let mut e = Engine {
        sys,
        cfg,
        length: b,
        horizon,
        lambda_hat,
        alive: Vec::new(),
        queue: BinaryHeap::new(),
        segments: Vec::new(),
        events: Vec::new(),
        next_id: 0,
        np_total: 0.0,
        max_np: 0.0,
        wall_left: ubar.first().clone(),
        wall_right: ubar.last().clone(),
        left_log: Vec::new(),
        right_log: Vec::new(),
        data_times: {
            let mut v: Vec<f64> = g1.breaks().iter().chain(g2.breaks()).copied().collect();
            v.sort_by(f64::total_cmp);
            v
        },
    };
    e.start(ubar, g1, g2)?;
    e.run(g1, g2)?;
    e.finish(ubar, g1, g2, bud)
}

impl<'a> Engine<'a> {
    fn check_state(&self, u: &State, t: f64, x: f64) -> Result<()> {
        let d = self.sys.dist_from_center(u);
        if !(d <= self.cfg.ball_margin * self.sys.r_ball()) {
            return Err(Error::BallEscape { t, x });
        }
        Ok(())
    }

    fn make_fronts(&mut self, fan: &WaveFan, t: f64, x: f64, gen: impl Fn(usize) -> u32) -> Result<Vec<Live>> {
        let mut out = Vec::with_capacity(fan.len());
        for w in &fan.waves {
            self.check_state(&w.u_l, t, x)?;
            self.check_state(&w.u_r, t, x)?;
            out.push(Live {
                id: self.fresh_id()?,
                kind: FrontKind::Physical { family: w.family, group: w.group },
                t0: t,
                x0: x,
                speed: w.speed,
                u_l: w.u_l.clone(),
                u_r: w.u_r.clone(),
                gen: gen(w.family),
                amp: w.amplitude.clone(),
            });
        }
        Ok(out)
    }

    fn np_front(&mut self, u_l: State, u_r: State, t: f64, x: f64, gen: u32) -> Result<Live> {
        self.check_state(&u_l, t, x)?;
        self.check_state(&u_r, t, x)?;
        Ok(Live {
            id: self.fresh_id()?,
            kind: FrontKind::NonPhysical,
            t0: t,
            x0: x,
            speed: self.lambda_hat,
            amp: (&u_r - &u_l).as_slice().to_vec(),
            u_l,
            u_r,
            gen,
        })
    }

    fn fresh_id(&mut self) -> Result<u64> {
        let id = self.next_id;
        self.next_id += 1;
        if self.next_id as usize > self.cfg.front_cap {
            return Err(Error::EventOverflow { count: self.next_id as usize, cap: self.cfg.front_cap });
        }
        Ok(id)
    }

    fn start(&mut self, ubar: &PiecewiseConstFn, g1: &PiecewiseConstFn, g2: &PiecewiseConstFn) -> Result<()> {
        let mut fronts = Vec::new();
        let (fan, ub) = solve_boundary_left(self.sys, g1.first(), ubar.first())?;
        self.check_state(&ub, 0.0, 0.0)?;
        fronts.extend(self.make_fronts(&fan, 0.0, 0.0, |_| 0)?);
        self.wall_left = ub.clone();
        self.left_log.push((0.0, ub));
        for (x, ul, ur) in ubar.jumps() {
            self.check_state(ul, 0.0, x)?;
            self.check_state(ur, 0.0, x)?;
            let fan = solve_riemann(self.sys, ul, ur)?;
            fronts.extend(self.make_fronts(&fan, 0.0, x, |_| 0)?);
        }
        let (fan, ub) = solve_boundary_right(self.sys, g2.first(), ubar.last())?;
        self.check_state(&ub, 0.0, self.length)?;
        fronts.extend(self.make_fronts(&fan, 0.0, self.length, |_| 0)?);
        self.wall_right = ub.clone();
        self.right_log.push((0.0, ub));
        self.alive = fronts;
        for i in 0..self.alive.len() {
            self.schedule_walls(i);
            if i + 1 < self.alive.len() {
                self.schedule_pair(i, 0.0);
            }
        }
        for &tj in g1.breaks() {
            if tj < self.horizon {
                self.queue.push(QEvent { t: tj, class: 0, x: 0.0, a: 0, b: 0, kind: QKind::JumpLeft });
            }
        }
        for &tj in g2.breaks() {
            if tj < self.horizon {
                self.queue.push(QEvent { t: tj, class: 0, x: self.length, a: 0, b: 0, kind: QKind::JumpRight });
            }
        }
        self.events.push(Event { t: 0.0, x: 0.0, kind: EventKind::Start, emitted: self.alive.len(), np_total: 0.0 });
        Ok(())
    }

    fn snap(&self, t: f64) -> f64 {
        let tol = 1e-12 * self.horizon.max(1.0);
        let i = self.data_times.partition_point(|&d| d < t);
        [i.wrapping_sub(1), i]
            .into_iter()
            .filter_map(|j| self.data_times.get(j))
            .find(|&&d| (d - t).abs() <= tol)
            .copied()
            .unwrap_or(t)
    }

    fn schedule_pair(&mut self, i: usize, now: f64) {
        let (a, b) = (&self.alive[i], &self.alive[i + 1]);
        let ds = a.speed - b.speed;
        if ds <= 0.0 {
            return;
        }
        let dx = (b.x_at(now) - a.x_at(now)).max(0.0);
        let t = self.snap(now + dx / ds).max(now);
        if t < self.horizon {
            let x = a.x_at(t).clamp(0.0, self.length);
            self.queue.push(QEvent { t, class: 1, x, a: a.id, b: b.id, kind: QKind::Cross });
        }
    }

    /// Snapped wall arrival time of a front and whether it is the right wall.
    fn arrival(&self, f: &Live) -> Option<(f64, bool)> {
        if f.speed < 0.0 {
            Some((self.snap(f.t0 + f.x0 / -f.speed).max(f.t0), false))
        } else if f.speed > 0.0 {
            Some((self.snap(f.t0 + (self.length - f.x0) / f.speed).max(f.t0), true))
        } else {
            None
        }
    }

    fn schedule_walls(&mut self, i: usize) {
        let f = &self.alive[i];
        let Some((t, right)) = self.arrival(f) else { return };
        let (kind, x) = if right { (QKind::HitRight, self.length) } else { (QKind::HitLeft, 0.0) };
        if t < self.horizon {
            self.queue.push(QEvent { t, class: 1, x, a: f.id, b: f.id, kind });
        }
    }

    fn index_of(&self, id: u64) -> Option<usize> {
        self.alive.iter().position(|f| f.id == id)
    }

    fn retire(&mut self, f: &Live, t: f64) {
        self.segments.push(Segment {
            id: f.id,
            kind: f.kind,
            t0: f.t0,
            x0: f.x0,
            t1: t,
            x1: f.x_at(t).clamp(0.0, self.length),
            speed: f.speed,
            u_l: f.u_l.clone(),
            u_r: f.u_r.clone(),
            amplitude: f.amp.clone(),
            generation: f.gen,
        });
        if f.is_np() {
            self.np_total -= f.strength();
        }
    }

    /// Replaces `alive[i..i+k]` by `new` at time `t` and schedules the affected pairs.
    fn splice(&mut self, i: usize, k: usize, new: Vec<Live>, t: f64) -> Result<()> {
        let dead: Vec<Live> = self.alive.drain(i..i + k).collect();
        for f in &dead {
            self.retire(f, t);
        }
        let added = new.len();
        for f in &new {
            if f.is_np() {
                self.np_total += f.strength();
            }
        }
        self.alive.splice(i..i, new);
        if self.np_total < 1e-15 {
            self.np_total = self.np_total.max(0.0);
        }
        self.max_np = self.max_np.max(self.np_total);
        if self.np_total > self.cfg.epsilon {
            return Err(Error::EpsilonBudgetBlown { strength: self.np_total, epsilon: self.cfg.epsilon });
        }
        for j in i..i + added {
            self.schedule_walls(j);
        }
        let lo = i.saturating_sub(1);
        let hi = (i + added).min(self.alive.len().saturating_sub(1));
        for j in lo..hi {
            self.schedule_pair(j, t);
        }
        Ok(())
    }

    fn run(&mut self, g1: &PiecewiseConstFn, g2: &PiecewiseConstFn) -> Result<()> {
        let mut count = 0usize;
        while let Some(ev) = self.queue.pop() {
            if ev.t >= self.horizon {
                break;
            }
            count += 1;
            if count > self.cfg.event_cap {
                return Err(Error::EventOverflow { count, cap: self.cfg.event_cap });
            }
            match ev.kind {
                QKind::Cross => {
                    let Some(i) = self.index_of(ev.a) else { continue };
                    if i + 1 >= self.alive.len() || self.alive[i + 1].id != ev.b {
                        continue;
                    }
                    self.cross(i, ev.t)?;
                }
                QKind::HitLeft => {
                    let Some(i) = self.index_of(ev.a) else { continue };
                    let g = g1.eval(ev.t).clone();
                    self.hit_left(i, ev.t, &g)?;
                }
                QKind::HitRight => {
                    let Some(i) = self.index_of(ev.a) else { continue };
                    let g = g2.eval(ev.t).clone();
                    self.hit_right(i, ev.t, &g)?;
                }
                QKind::JumpLeft => {
                    let g = g1.eval(ev.t).clone();
                    // a front reaching the wall at the jump time meets the new data
                    while self.alive.first().is_some_and(|f| self.arrival(f) == Some((ev.t, false))) {
                        self.hit_left(0, ev.t, &g)?;
                    }
                    self.boundary_left(ev.t, &g, None)?;
                }
                QKind::JumpRight => {
                    let g = g2.eval(ev.t).clone();
                    while self.alive.last().is_some_and(|f| self.arrival(f) == Some((ev.t, true))) {
                        let i = self.alive.len() - 1;
                        self.hit_right(i, ev.t, &g)?;
                    }
                    self.boundary_right(ev.t, &g, None)?;
                }
            }
        }
        Ok(())
    }

    fn log(&mut self, t: f64, x: f64, kind: EventKind, emitted: usize) {
        self.events.push(Event { t, x, kind, emitted, np_total: self.np_total });
    }

    fn cross(&mut self, i: usize, t: f64) -> Result<()> {
        let (a, b) = (self.alive[i].clone(), self.alive[i + 1].clone());
        let x = (0.5 * (a.x_at(t) + b.x_at(t))).clamp(0.0, self.length);
        let (ul, ur) = (a.u_l.clone(), b.u_r.clone());
        let eps = self.cfg.epsilon;
        let new: Vec<Live>;
        let accurate;
        match (a.group(), b.group()) {
            (Some(_), Some(_)) => {
                let big = a.strength() * b.strength() >= eps * eps * self.cfg.rho_simp;
                accurate = a.gen.max(b.gen) < self.cfg.gen_cap && big;
                let next_gen = a.gen.max(b.gen) + 1;
                let (fa, fb) = (a.kind, b.kind);
                let gen_of = move |fam: usize| match (fa, fb) {
                    (FrontKind::Physical { family, .. }, _) if family == fam => a.gen,
                    (_, FrontKind::Physical { family, .. }) if family == fam => b.gen,
                    _ => next_gen,
                };
                if accurate {
                    let fan = solve_riemann(self.sys, &ul, &ur)?;
                    new = self.make_fronts(&fan, t, x, gen_of)?;
                } else {
                    // incoming families keep their accurate amplitudes, the rest is dumped
                    let sigma = riemann_amplitudes(self.sys, &ul, &ur)?;
                    let (_, keep) = self.incoming(&a, &b);
                    new = self.simplified(&ul, &ur, &sigma, &keep, t, x, &gen_of, next_gen)?;
                }
            }
            _ => {
                accurate = false;
                // a physical front passes a non-physical one keeping its amplitude
                let (sigma, keep) = self.incoming(&a, &b);
                let g = a.gen.max(b.gen);
                new = self.simplified(&ul, &ur, &sigma, &keep, t, x, &|_| g, g)?;
            }
        }
        let emitted = new.len();
        self.splice(i, 2, new, t)?;
        self.log(t, x, EventKind::Crossing { left: a.id, right: b.id, accurate }, emitted);
        Ok(())
    }

    /// Amplitudes and groups of the physical fronts among `a`, `b`.
    fn incoming(&self, a: &Live, b: &Live) -> (Vec<f64>, Vec<std::ops::Range<usize>>) {
        let groups = self.sys.groups();
        let mut sigma = vec![0.0; self.sys.n()];
        let mut keep = Vec::new();
        for f in [b, a] {
            if let FrontKind::Physical { family, group } = f.kind {
                for (j, v) in f.amp.iter().enumerate() {
                    sigma[family + j] += *v;
                }
                keep.push(groups[group].clone());
            }
        }
        (sigma, keep)
    }

    /// Keeps the waves of `keep` with amplitudes from `sigma`; the remaining jump
    /// goes into one non-physical front. Waves slower than `λ̂` are composed from
    /// `ul`, faster ones back from `ur`.
    #[allow(clippy::too_many_arguments)]
    fn simplified(
        &mut self,
        ul: &State,
        ur: &State,
        sigma: &[f64],
        keep: &[std::ops::Range<usize>],
        t: f64,
        x: f64,
        gen_of: &dyn Fn(usize) -> u32,
        np_gen: u32,
    ) -> Result<Vec<Live>> {
        let mut keep: Vec<_> = keep.iter().filter(|g| sigma[(*g).clone()].iter().any(|s| s.abs() >= ZERO_WAVE)).cloned().collect();
        keep.sort_by_key(|g| g.start);
        keep.dedup();
        let lam = self.sys.eigen(ul)?.lambdas;
        let (slow, fast): (Vec<_>, Vec<_>) = keep.into_iter().partition(|g| lam[g.start] < self.lambda_hat);
        let slow_fan = build_fan(self.sys, ul, sigma, &slow, None)?;
        let u1 = slow_fan.waves.last().map(|w| w.u_r.clone()).unwrap_or_else(|| ul.clone());
        let u2 = crate::riemann::uncompose(self.sys, ur, sigma, &fast)?;
        let fast_fan = build_fan(self.sys, &u2, sigma, &fast, Some(ur))?;
        let mut out = self.make_fronts(&slow_fan, t, x, gen_of)?;
        let mut fast_fronts = self.make_fronts(&fast_fan, t, x, gen_of)?;
        if (&u2 - &u1).norm() > 1e-14 {
            out.push(self.np_front(u1, u2, t, x, np_gen)?);
        } else if let Some(f) = fast_fronts.first_mut() {
            // absorb roundoff so that the chain of states is exact
            f.u_l = u1;
        } else if let Some(f) = out.last_mut() {
            f.u_r = ur.clone();
        }
        out.extend(fast_fronts);
        Ok(out)
    }

    /// Fronts between the wall and the arriving one sit on the wall too (coincident
    /// arrivals or fans emitted at the same instant); they join one boundary problem.
    fn hit_left(&mut self, i: usize, t: f64, g: &State) -> Result<()> {
        let f = self.alive[i].clone();
        let tol = 1e-9 * self.length;
        if self.alive[..i].iter().any(|h| h.x_at(t) > tol) {
            return Err(Error::OutOfDomain { t, x: 0.0 });
        }
        self.wall_left = f.u_r.clone();
        self.boundary_left(t, g, Some((i + 1, f)))
    }

    fn hit_right(&mut self, i: usize, t: f64, g: &State) -> Result<()> {
        let f = self.alive[i].clone();
        let tol = 1e-9 * self.length;
        if self.alive[i + 1..].iter().any(|h| h.x_at(t) < self.length - tol) {
            return Err(Error::OutOfDomain { t, x: self.length });
        }
        self.wall_right = f.u_l.clone();
        let k = self.alive.len() - i;
        self.boundary_right(t, g, Some((k, f)))
    }

    fn boundary_left(&mut self, t: f64, g: &State, hit: Option<(usize, Live)>) -> Result<()> {
        let u_inner = self.wall_left.clone();
        let (fan, ub) = solve_boundary_left(self.sys, g, &u_inner)?;
        self.check_state(&ub, t, 0.0)?;
        let gen = hit.as_ref().map_or(0, |(_, f)| f.gen + 1);
        let new = self.make_fronts(&fan, t, 0.0, |_| gen)?;
        let emitted = new.len();
        let (i, k, kind) = match &hit {
            Some((k, f)) => (0, *k, EventKind::WallHit { right_wall: false, front: f.id }),
            None => (0, 0, EventKind::DataJump { right_wall: false }),
        };
        self.splice(i, k, new, t)?;
        if self.alive.is_empty() {
            self.wall_right = ub.clone();
        }
        self.wall_left = ub.clone();
        self.left_log.push((t, ub));
        self.log(t, 0.0, kind, emitted);
        Ok(())
    }

    fn boundary_right(&mut self, t: f64, g: &State, hit: Option<(usize, Live)>) -> Result<()> {
        let u_inner = self.wall_right.clone();
        let (fan, ub) = solve_boundary_right(self.sys, g, &u_inner)?;
        self.check_state(&ub, t, self.length)?;
        let gen = hit.as_ref().map_or(0, |(_, f)| f.gen + 1);
        let new = self.make_fronts(&fan, t, self.length, |_| gen)?;
        let emitted = new.len();
        let (i, k, kind) = match &hit {
            Some((k, f)) => (self.alive.len() - k, *k, EventKind::WallHit { right_wall: true, front: f.id }),
            None => (self.alive.len(), 0, EventKind::DataJump { right_wall: true }),
        };
        self.splice(i, k, new, t)?;
        if self.alive.is_empty() {
            self.wall_left = ub.clone();
        }
        self.wall_right = ub.clone();
        self.right_log.push((t, ub));
        self.log(t, self.length, kind, emitted);
        Ok(())
    }

    fn finish(
        mut self,
        ubar: &PiecewiseConstFn,
        g1: &PiecewiseConstFn,
        g2: &PiecewiseConstFn,
        bud: crate::bvfun::SmallnessBudget,
    ) -> Result<TrackerRun> {
        let t = self.horizon;
        for f in std::mem::take(&mut self.alive) {
            self.retire(&f, t);
        }
        let trace = |log: &[(f64, State)]| -> Result<PiecewiseConstFn> {
            let breaks = log.iter().skip(1).map(|(t, _)| *t).collect();
            let values = log.iter().map(|(_, u)| u.clone()).collect();
            PiecewiseConstFn::new(0.0, t, breaks, values)
        };
        let left = trace(&self.left_log)?;
        let right = trace(&self.right_log)?;
        Ok(TrackerRun::new(
            self.length,
            self.horizon,
            self.cfg.epsilon,
            self.lambda_hat,
            self.segments,
            self.events,
            ubar.clone(),
            g1.clone(),
            g2.clone(),
            left,
            right,
            self.max_np,
            bud,
        ))
    }
}
