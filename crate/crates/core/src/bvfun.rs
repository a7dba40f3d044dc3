//! Piecewise-constant functions of one variable.
//!
//! A [`PiecewiseConstFn`] is kept in canonical form: breakpoints are strictly
//! increasing and interior to the domain, and no two adjacent cells carry the
//! same value (componentwise within [`MERGE_TOL`]). Total variation and L¹
//! distances are computed exactly from the cell structure.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::State;

/// Componentwise tolerance under which adjacent cell values are merged.
pub const MERGE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstFn {
    a: f64,
    b: f64,
    breaks: Vec<f64>,
    values: Vec<State>,
}

fn nearly_equal(u: &State, v: &State) -> bool {
    u.len() == v.len() && u.iter().zip(v.iter()).all(|(x, y)| (x - y).abs() <= MERGE_TOL)
}

impl PiecewiseConstFn {
    /// Builds a function from raw cells, dropping breakpoints outside `(a, b)`
    /// and merging equal neighbours.
    pub fn new(a: f64, b: f64, breaks: Vec<f64>, values: Vec<State>) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::EmptyDomain { a, b });
        }
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidArgument("values of mixed dimension".into()));
        }
        if breaks.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidArgument("breakpoints must be nondecreasing".into()));
        }
        let mut out = Self { a, b, breaks: Vec::new(), values: Vec::new() };
        let mut current = values[0].clone();
        for (x, v) in breaks.into_iter().zip(values.into_iter().skip(1)) {
            if x <= a {
                current = v;
                continue;
            }
            if x >= b {
                break;
            }
            if nearly_equal(&current, &v) {
                continue;
            }
            // coincident breakpoints: the later value wins
            if out.breaks.last() == Some(&x) {
                out.breaks.pop();
                let prev = out.values.pop().unwrap();
                current = prev;
                if nearly_equal(&current, &v) {
                    continue;
                }
            }
            out.values.push(std::mem::replace(&mut current, v));
            out.breaks.push(x);
        }
        out.values.push(current);
        Ok(out)
    }

    pub fn constant(a: f64, b: f64, value: State) -> Result<Self> {
        Self::new(a, b, Vec::new(), vec![value])
    }

    /// Single jump at `x`.
    pub fn step(a: f64, b: f64, x: f64, left: State, right: State) -> Result<Self> {
        Self::new(a, b, vec![x], vec![left, right])
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[State] {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    /// Cells as `(lo, hi, value)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, &State)> + '_ {
        (0..self.values.len()).map(move |j| {
            let lo = if j == 0 { self.a } else { self.breaks[j - 1] };
            let hi = if j == self.breaks.len() { self.b } else { self.breaks[j] };
            (lo, hi, &self.values[j])
        })
    }

    /// Value at `x`, right-continuous at breakpoints; clamps to the domain.
    pub fn eval(&self, x: f64) -> &State {
        let j = self.breaks.partition_point(|&br| br <= x);
        &self.values[j]
    }

    /// Value on the cell to the left of `x` (left limit).
    pub fn eval_left(&self, x: f64) -> &State {
        let j = self.breaks.partition_point(|&br| br < x);
        &self.values[j]
    }

    /// u(a+)
    pub fn first(&self) -> &State {
        &self.values[0]
    }

    /// u(b-)
    pub fn last(&self) -> &State {
        self.values.last().unwrap()
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, &State, &State)> + '_ {
        self.breaks
            .iter()
            .enumerate()
            .map(move |(j, &x)| (x, &self.values[j], &self.values[j + 1]))
    }

    pub fn tv(&self) -> f64 {
        self.values.windows(2).map(|w| (&w[1] - &w[0]).norm()).fold(0.0, |a, b| a + b)
    }

    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        if lo < self.a - 1e-12 || hi > self.b + 1e-12 || !(hi > lo) {
            return Err(Error::DomainMismatch { a0: self.a, b0: self.b, a1: lo, b1: hi });
        }
        let j0 = self.breaks.partition_point(|&br| br <= lo);
        let j1 = self.breaks.partition_point(|&br| br < hi);
        let breaks = self.breaks[j0..j1].to_vec();
        let values = self.values[j0..=j1].to_vec();
        Self::new(lo, hi, breaks, values)
    }

    /// Applies `f` cellwise.
    pub fn map<F: Fn(&State) -> State>(&self, f: F) -> Self {
        let values = self.values.iter().map(f).collect();
        Self::new(self.a, self.b, self.breaks.clone(), values).expect("map keeps a valid partition")
    }

    /// Cellwise map that also sees the cell midpoint.
    pub fn map_with_x<F: Fn(f64, &State) -> State>(&self, f: F) -> Self {
        let values = self.cells().map(|(lo, hi, v)| f(0.5 * (lo + hi), v)).collect();
        Self::new(self.a, self.b, self.breaks.clone(), values).expect("map keeps a valid partition")
    }

    /// Pulls the function back through the affine map sending `[a, b]` onto
    /// `[new_a, new_b]`, optionally reversing orientation.
    pub fn reparametrize(&self, new_a: f64, new_b: f64, reverse: bool) -> Result<Self> {
        let scale = (new_b - new_a) / (self.b - self.a);
        if reverse {
            let breaks = self.breaks.iter().rev().map(|&x| new_a + (self.b - x) * scale).collect();
            let values = self.values.iter().rev().cloned().collect();
            Self::new(new_a, new_b, breaks, values)
        } else {
            let breaks = self.breaks.iter().map(|&x| new_a + (x - self.a) * scale).collect();
            Self::new(new_a, new_b, breaks, self.values.clone())
        }
    }

    /// Concatenates functions on adjacent intervals.
    pub fn concat(parts: &[PiecewiseConstFn]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                let prev_b = parts[i - 1].b;
                if (p.a - prev_b).abs() > 1e-12 {
                    return Err(Error::DomainMismatch { a0: parts[i - 1].a, b0: prev_b, a1: p.a, b1: p.b });
                }
                breaks.push(p.a);
            }
            breaks.extend_from_slice(&p.breaks);
            values.extend(p.values.iter().cloned());
        }
        Self::new(first.a, parts.last().unwrap().b, breaks, values)
    }

    /// Common refinement of two partitions: yields `(lo, hi, f-value, g-value)`.
    fn overlay<'a>(&'a self, other: &'a Self) -> Vec<(f64, f64, &'a State, &'a State)> {
        let mut pts: Vec<f64> = self.breaks.iter().chain(other.breaks.iter()).copied().collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut out = Vec::with_capacity(pts.len() + 1);
        let mut lo = self.a;
        for &x in pts.iter().chain(std::iter::once(&self.b)) {
            if x > lo {
                let mid = 0.5 * (lo + x);
                out.push((lo, x, self.eval(mid), other.eval(mid)));
                lo = x;
            }
        }
        out
    }

    fn check_same_domain(&self, other: &Self) -> Result<()> {
        let tol = 1e-12 * (1.0 + self.a.abs().max(self.b.abs()));
        if (self.a - other.a).abs() > tol || (self.b - other.b).abs() > tol {
            return Err(Error::DomainMismatch { a0: self.a, b0: self.b, a1: other.a, b1: other.b });
        }
        Ok(())
    }

    /// Pointwise combination `x ↦ f(p₁(x), …, p_k(x))` on the common refinement.
    pub fn combine<F: Fn(&[&State]) -> State>(parts: &[&PiecewiseConstFn], f: F) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("nothing to combine".into()))?;
        for p in &parts[1..] {
            first.check_same_domain(p)?;
        }
        let mut breaks: Vec<f64> = parts.iter().flat_map(|p| p.breaks.iter().copied()).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks.retain(|&x| x > first.a && x < first.b);
        let mut edges = Vec::with_capacity(breaks.len() + 2);
        edges.push(first.a);
        edges.extend(&breaks);
        edges.push(first.b);
        let values = edges
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let vals: Vec<&State> = parts.iter().map(|p| p.eval(mid)).collect();
                f(&vals)
            })
            .collect();
        Self::new(first.a, first.b, breaks, values)
    }

    /// Exact ∫|f − g|.
    pub fn l1_dist(&self, other: &Self) -> Result<f64> {
        self.check_same_domain(other)?;
        if self.dim() != other.dim() {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        Ok(self.overlay(other).into_iter().map(|(lo, hi, f, g)| (hi - lo) * (f - g).norm()).fold(0.0, |a, b| a + b))
    }

    /// Exact ∫|f − c| for a constant `c`.
    pub fn l1_dist_const(&self, c: &State) -> f64 {
        self.cells().map(|(lo, hi, v)| (hi - lo) * (v - c).norm()).fold(0.0, |a, b| a + b)
    }

    /// Maximum norm of `f − g`.
    pub fn sup_dist(&self, other: &Self) -> Result<f64> {
        self.check_same_domain(other)?;
        Ok(self.overlay(other).into_iter().map(|(_, _, f, g)| (f - g).norm()).fold(0.0, f64::max))
    }

    /// Serializes to the `# domain a b` + `break,value_1,...` format. The
    /// first row's break column holds the left endpoint of the domain.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# domain {} {}", self.a, self.b).unwrap();
        for (lo, _, v) in self.cells() {
            write!(s, "{lo}").unwrap();
            for c in v.iter() {
                write!(s, ",{c}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| cfg_err(1, 1, "empty input"))?;
        let rest = header
            .trim()
            .strip_prefix("# domain")
            .ok_or_else(|| cfg_err(1, 1, "expected `# domain a b` header"))?;
        let nums: Vec<&str> = rest.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(cfg_err(1, 10, "header needs two numbers"));
        }
        let a = parse_num(nums[0], 1, 10)?;
        let b = parse_num(nums[1], 1, 10)?;
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let mut col = 1;
            let mut fields = Vec::new();
            for f in line.split(',') {
                fields.push(parse_num(f.trim(), i + 1, col)?);
                col += f.len() + 1;
            }
            if fields.len() < 2 {
                return Err(cfg_err(i + 1, 1, "row needs a break and at least one value"));
            }
            if !values.is_empty() {
                breaks.push(fields[0]);
            }
            values.push(State::from_vec(fields[1..].to_vec()));
        }
        if values.is_empty() {
            return Err(cfg_err(2, 1, "no rows"));
        }
        Self::new(a, b, breaks, values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn cfg_err(line: usize, column: usize, message: &str) -> Error {
    Error::Config { line, column, message: message.to_string() }
}

fn parse_num(s: &str, line: usize, column: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| cfg_err(line, column, &format!("not a number: `{s}`")))
}

/// Number of equal cells of width close to `h` covering `[a, b]`.
pub fn cell_count(a: f64, b: f64, h: f64) -> usize {
    (((b - a) / h).round() as usize).max(1)
}

/// Cell-midpoint sampling of `f` on a uniform mesh of width about `h`.
pub fn sample_bv<F: Fn(f64) -> State>(f: F, a: f64, b: f64, h: f64) -> Result<PiecewiseConstFn> {
    if !(b > a) {
        return Err(Error::EmptyDomain { a, b });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("mesh width must be positive, got {h}")));
    }
    let n = cell_count(a, b, h);
    let dx = (b - a) / n as f64;
    let breaks = (1..n).map(|j| a + j as f64 * dx).collect();
    let values = (0..n).map(|j| f(a + (j as f64 + 0.5) * dx)).collect();
    PiecewiseConstFn::new(a, b, breaks, values)
}

/// Samples a dense table of nodes `(x_i, v_i)`, read as a piecewise-linear
/// profile, on a mesh of width about `h`.
pub fn sample_table(xs: &[f64], vs: &[State], h: f64) -> Result<PiecewiseConstFn> {
    if xs.len() < 2 || xs.len() != vs.len() {
        return Err(Error::EmptyDomain { a: xs.first().copied().unwrap_or(0.0), b: xs.last().copied().unwrap_or(0.0) });
    }
    let interp = |x: f64| {
        let j = xs.partition_point(|&xi| xi <= x).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[j - 1], xs[j]);
        let w = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        &vs[j - 1] * (1.0 - w) + &vs[j] * w
    };
    sample_bv(interp, xs[0], *xs.last().unwrap(), h)
}

/// Smallness functional of the initial-boundary data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessBudget {
    /// TV(ū) + |ū(0+)|
    pub tv_data: f64,
    /// TV(g₁) + TV(g₂)
    pub tv_bc: f64,
    /// |b₁(ū(0+)) − g₁(0+)| + |b₂(ū(L−)) − g₂(0+)|
    pub compat: f64,
    pub total: f64,
}

/// Assembles the smallness functional. States are measured relative to
/// `center`, the equilibrium the working ball is centred on.
pub fn budget(
    ubar: &PiecewiseConstFn,
    g1: &PiecewiseConstFn,
    g2: &PiecewiseConstFn,
    b1: &dyn Fn(&State) -> State,
    b2: &dyn Fn(&State) -> State,
    center: &State,
) -> SmallnessBudget {
    let tv_data = ubar.tv() + (ubar.first() - center).norm();
    let tv_bc = g1.tv() + g2.tv();
    let compat = (b1(ubar.first()) - g1.first()).norm() + (b2(ubar.last()) - g2.first()).norm();
    SmallnessBudget { tv_data, tv_bc, compat, total: tv_data + tv_bc + compat }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> State {
        State::from_vec(vec![v])
    }

    #[test]
    fn canonical_merges_equal_neighbours() {
        let f = PiecewiseConstFn::new(0.0, 1.0, vec![0.2, 0.5, 0.7], vec![s(1.0), s(1.0), s(2.0), s(2.0)]).unwrap();
        assert_eq!(f.breaks(), &[0.5]);
        assert_eq!(f.tv(), 1.0);
        let again = PiecewiseConstFn::new(0.0, 1.0, f.breaks().to_vec(), f.values().to_vec()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn step_is_preserved_by_sampling() {
        let f = sample_bv(|x| s(if x < 0.5 { 0.0 } else { 0.3 }), 0.0, 1.0, 0.1).unwrap();
        assert_eq!(f.breaks().len(), 1);
        assert!((f.breaks()[0] - 0.5).abs() < 1e-15);
        assert!((f.tv() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn ramp_midpoints() {
        let f = sample_bv(s, 0.0, 1.0, 0.25).unwrap();
        let vals: Vec<f64> = f.values().iter().map(|v| v[0]).collect();
        assert_eq!(vals, vec![0.125, 0.375, 0.625, 0.875]);
        assert!((f.tv() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn constant_sampling_is_one_cell() {
        let f = sample_bv(|_| s(0.0), 0.0, 1.0, 0.01).unwrap();
        assert_eq!(f.cell_count(), 1);
        assert_eq!(f.tv(), 0.0);
    }

    #[test]
    fn l1_examples() {
        let z = PiecewiseConstFn::constant(0.0, 2.0, State::from_vec(vec![0.0, 0.0])).unwrap();
        let e = PiecewiseConstFn::constant(0.0, 2.0, State::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(z.l1_dist(&z).unwrap(), 0.0);
        assert_eq!(z.l1_dist(&e).unwrap(), 2.0);
        let st = PiecewiseConstFn::step(0.0, 1.0, 0.5, s(0.0), s(1.0)).unwrap();
        let z1 = PiecewiseConstFn::constant(0.0, 1.0, s(0.0)).unwrap();
        assert!((st.l1_dist(&z1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(st.l1_dist(&z), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn restrict_reduces_tv() {
        let f = PiecewiseConstFn::new(0.0, 1.0, vec![0.2, 0.6], vec![s(0.0), s(1.0), s(0.5)]).unwrap();
        let r = f.restrict(0.3, 1.0).unwrap();
        assert_eq!(r.breaks(), &[0.6]);
        assert!(r.tv() <= f.tv());
        let r2 = f.restrict(0.3, 0.5).unwrap();
        assert_eq!(r2.cell_count(), 1);
    }

    #[test]
    fn budget_examples() {
        let c = s(0.0);
        let id = |u: &State| u.clone();
        let z = PiecewiseConstFn::constant(0.0, 1.0, s(0.0)).unwrap();
        let zt = PiecewiseConstFn::constant(0.0, 2.0, s(0.0)).unwrap();
        assert_eq!(budget(&z, &zt, &zt, &id, &id, &c).total, 0.0);

        // ū = 0.02 on (0, 0.5), 0 afterwards; traces matched by the g's
        let u = PiecewiseConstFn::step(0.0, 1.0, 0.5, s(0.02), s(0.0)).unwrap();
        let g1 = PiecewiseConstFn::constant(0.0, 2.0, s(0.02)).unwrap();
        let b = budget(&u, &g1, &zt, &id, &id, &c);
        assert!((b.total - 0.04).abs() < 1e-15);
        assert_eq!(b.compat, 0.0);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let f = PiecewiseConstFn::new(
            0.0,
            1.0,
            vec![0.1 + 0.2, 2.0 / 3.0],
            vec![State::from_vec(vec![1e-17, -0.3]), State::from_vec(vec![std::f64::consts::PI, 0.0]), State::from_vec(vec![-1.0, 1.0 / 7.0])],
        )
        .unwrap();
        let g = PiecewiseConstFn::from_csv(&f.to_csv()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn csv_errors_carry_position() {
        let err = PiecewiseConstFn::from_csv("# domain 0 1\n0,abc\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
    }

    #[test]
    fn reparametrize_reverse() {
        let f = PiecewiseConstFn::step(0.0, 1.0, 0.25, s(1.0), s(2.0)).unwrap();
        let r = f.reparametrize(0.0, 2.0, true).unwrap();
        assert_eq!(r.breaks(), &[1.5]);
        assert_eq!(r.first()[0], 2.0);
    }
}
