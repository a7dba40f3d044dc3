//! Contact curves, the contact manifold of the multiple family, and the
//! interior and boundary Riemann solvers of a linearly degenerate system.
//!
//! Amplitudes are stored as one flat vector indexed by family. A wave of the
//! multiple family `k..k+p` is the composition of the flows of `r_{k+p}, …, r_{k+1}`
//! (descending index), so amplitudes of distinct groups compose in ascending
//! group order.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::systems::{SmoothMap, SystemDef};
use crate::State;

/// Amplitudes below this are dropped from fans.
pub const ZERO_WAVE: f64 = 1e-12;
const CURVE_TOL: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-13;
const NEWTON_ACCEPT: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 40;

/// One wave of a fan.
#[derive(Debug, Clone, PartialEq)]
pub struct Wave {
    /// Group index (the multiple block counts once).
    pub group: usize,
    /// First family of the group (0-based).
    pub family: usize,
    /// One entry per family of the group.
    pub amplitude: Vec<f64>,
    pub speed: f64,
    pub u_l: State,
    pub u_r: State,
}

impl Wave {
    pub fn strength(&self) -> f64 {
        self.amplitude.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Ordered list of waves, ascending speed, chaining `u_l → u_r`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaveFan {
    pub waves: Vec<Wave>,
    /// Size of any jump not carried by physical waves (0 for exact solves).
    pub nonphysical_strength: f64,
}

impl WaveFan {
    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    pub fn len(&self) -> usize {
        self.waves.len()
    }

    /// Flat amplitude vector indexed by family.
    pub fn amplitudes(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for w in &self.waves {
            for (j, a) in w.amplitude.iter().enumerate() {
                s[w.family + j] = *a;
            }
        }
        s
    }
}

/// `|G(u_r) − G(u_l) − s (H(u_r) − H(u_l))|`.
pub fn rh_residual(sys: &SystemDef, u_l: &State, u_r: &State, s: f64) -> f64 {
    let dg = sys.eval_g(u_r) - sys.eval_g(u_l);
    let dh = sys.eval_h(u_r) - sys.eval_h(u_l);
    (dg - s * dh).norm()
}

fn check_ball(sys: &SystemDef, u: &State) -> Result<()> {
    let d = sys.dist_from_center(u);
    if !(d <= sys.r_ball()) {
        return Err(Error::LeftBall { norm: d, radius: sys.r_ball() });
    }
    Ok(())
}

/// Flow of `rᵢ` for parameter length `s` from `u0`.
pub fn flow(sys: &SystemDef, i: usize, u0: &State, s: f64) -> Result<State> {
    if s == 0.0 {
        return Ok(u0.clone());
    }
    if sys.constant_matrix().is_some() {
        let u = u0 + s * sys.anchors()[i].clone();
        check_ball(sys, &u)?;
        return Ok(u);
    }
    let rhs = |u: &State| -> Result<State> {
        check_ball(sys, u)?;
        Ok(sys.eigen(u)?.r(i))
    };
    let u = dopri(&rhs, u0, s)?;
    check_ball(sys, &u)?;
    Ok(u)
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Dormand–Prince 5(4) integration of the autonomous ODE `u' = f(u)` over `[0, s]`.
fn dopri(f: &dyn Fn(&State) -> Result<State>, u0: &State, s: f64) -> Result<State> {
    let dir = s.signum();
    let total = s.abs();
    let mut t = 0.0;
    let mut h = total.min(0.05);
    let hmin = 1e-12 * total.max(1e-3);
    let mut u = u0.clone();
    let mut k1 = f(&u)?;
    let mut k = vec![k1.clone(); 7];
    while t < total {
        if t + h > total {
            h = total - t;
        }
        let hs = dir * h;
        k[0] = k1.clone();
        for st in 0..6 {
            let mut y = u.clone();
            for (j, kj) in k.iter().enumerate().take(st + 1) {
                let a = A[st][j];
                if a != 0.0 {
                    y.axpy(hs * a, kj, 1.0);
                }
            }
            k[st + 1] = f(&y)?;
        }
        let mut u5 = u.clone();
        for j in 0..6 {
            u5.axpy(hs * A[5][j], &k[j], 1.0);
        }
        let mut err: f64 = 0.0;
        for c in 0..u.len() {
            let mut e = 0.0;
            for j in 0..7 {
                let b5 = if j < 6 { A[5][j] } else { 0.0 };
                e += (b5 - B4[j]) * k[j][c];
            }
            let sc = CURVE_TOL * (1.0 + u5[c].abs());
            err = err.max((hs * e).abs() / sc);
        }
        if err <= 1.0 {
            t += h;
            u = u5;
            k1 = k[6].clone();
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < hmin && t < total {
            return Err(Error::CurveStiff);
        }
    }
    Ok(u)
}

/// `R_i(σ)[u0]` for a simple family; `|σ| ≤ σ₀ = r_ball/4`.
pub fn contact_curve(sys: &SystemDef, i: usize, u0: &State, sigma: f64) -> Result<State> {
    let s0 = 0.25 * sys.r_ball();
    if sigma.abs() > s0 {
        return Err(Error::InvalidArgument(format!("|sigma| = {} exceeds {s0}", sigma.abs())));
    }
    flow(sys, i, u0, sigma)
}

/// `Ψ(σ_{k+p}, …, σ_{k+1})[u0]`: `sigma[j]` belongs to family `k + j`.
pub fn contact_manifold(sys: &SystemDef, u0: &State, sigma: &[f64]) -> Result<State> {
    let mult = sys.mult();
    if sigma.len() != mult.p {
        return Err(Error::InvalidArgument(format!(
            "manifold needs {} amplitudes, got {}",
            mult.p,
            sigma.len()
        )));
    }
    let s0 = 0.25 * sys.r_ball();
    if sigma.iter().any(|s| s.abs() > s0) {
        return Err(Error::InvalidArgument(format!("amplitude exceeds {s0}")));
    }
    apply_group(sys, mult.k..mult.k + mult.p, u0, sigma)
}

fn apply_group(sys: &SystemDef, g: Range<usize>, u0: &State, amps: &[f64]) -> Result<State> {
    let mut u = u0.clone();
    for j in g.clone().rev() {
        u = flow(sys, j, &u, amps[j - g.start])?;
    }
    Ok(u)
}

fn unapply_group(sys: &SystemDef, g: Range<usize>, u0: &State, amps: &[f64]) -> Result<State> {
    let mut u = u0.clone();
    for j in g.clone() {
        u = flow(sys, j, &u, -amps[j - g.start])?;
    }
    Ok(u)
}

/// Composes groups `groups` (ascending) from `u0` with flat amplitudes `sigma`
/// (indexed by family). Returns the state after each group.
pub fn compose(
    sys: &SystemDef,
    u0: &State,
    sigma: &[f64],
    groups: &[Range<usize>],
) -> Result<Vec<State>> {
    let mut out = Vec::with_capacity(groups.len());
    let mut u = u0.clone();
    for g in groups {
        u = apply_group(sys, g.clone(), &u, &sigma[g.clone()])?;
        out.push(u.clone());
    }
    Ok(out)
}

/// Inverse of [`compose`]: the state `v` with `compose(v, sigma, groups).last() = u_end`.
pub fn uncompose(
    sys: &SystemDef,
    u_end: &State,
    sigma: &[f64],
    groups: &[Range<usize>],
) -> Result<State> {
    let mut u = u_end.clone();
    for g in groups.iter().rev() {
        u = unapply_group(sys, g.clone(), &u, &sigma[g.clone()])?;
    }
    Ok(u)
}

/// Builds the fan from `u0` through `groups` with amplitudes `sigma`,
/// omitting negligible waves and pinning the last state to `u_end` if given.
pub fn build_fan(
    sys: &SystemDef,
    u0: &State,
    sigma: &[f64],
    groups: &[Range<usize>],
    u_end: Option<&State>,
) -> Result<WaveFan> {
    let all = sys.groups();
    let live: Vec<&Range<usize>> = groups
        .iter()
        .filter(|g| sigma[(*g).clone()].iter().map(|a| a * a).sum::<f64>().sqrt() >= ZERO_WAVE)
        .collect();
    let mut waves = Vec::with_capacity(live.len());
    let mut u = u0.clone();
    for (idx, g) in live.iter().enumerate() {
        let next = match (idx + 1 == live.len(), u_end) {
            (true, Some(e)) => e.clone(),
            _ => apply_group(sys, (*g).clone(), &u, &sigma[(*g).clone()])?,
        };
        let speed = sys.lambda(g.start, &u)?;
        waves.push(Wave {
            group: all.iter().position(|r| r == *g).expect("group"),
            family: g.start,
            amplitude: sigma[(*g).clone()].to_vec(),
            speed,
            u_l: u,
            u_r: next.clone(),
        });
        u = next;
    }
    Ok(WaveFan { waves, nonphysical_strength: 0.0 })
}

/// Damped Newton on `F(σ) = 0` with a finite-difference Jacobian refreshed when
/// progress stalls. `jac0` is an initial Jacobian guess.
fn newton(
    f: &dyn Fn(&DVector<f64>) -> Result<DVector<f64>>,
    x0: DVector<f64>,
    jac0: Option<DMatrix<f64>>,
) -> Result<DVector<f64>> {
    let dim = x0.len();
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut res = fx.norm();
    if res <= NEWTON_TOL {
        return Ok(x);
    }
    let fd_jac = |x: &DVector<f64>, fx: &DVector<f64>| -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(fx.len(), dim);
        for c in 0..dim {
            let h = 1e-7 * (1.0 + x[c].abs());
            let mut xp = x.clone();
            xp[c] += h;
            let mut xm = x.clone();
            xm[c] -= h;
            let col = (f(&xp)? - f(&xm)?) / (2.0 * h);
            j.set_column(c, &col);
        }
        Ok(j)
    };
    let mut jac = match jac0 {
        Some(j) => j,
        None => fd_jac(&x, &fx)?,
    };
    let mut fresh = false;
    for _ in 0..NEWTON_MAX_ITER {
        let lu = jac.clone().lu();
        let Some(dx) = lu.solve(&fx) else {
            if fresh {
                return Err(Error::NoConvergence { residual: res });
            }
            jac = fd_jac(&x, &fx)?;
            fresh = true;
            continue;
        };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let xn = &x - step * &dx;
            if let Ok(fxn) = f(&xn) {
                let rn = fxn.norm();
                if rn < res || rn <= NEWTON_TOL {
                    accepted = Some((xn, fxn, rn));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((xn, fxn, rn)) => {
                let slow = rn > 0.25 * res;
                let small_step = (step * dx.norm()) <= 1e-15 * (1.0 + x.norm());
                x = xn;
                fx = fxn;
                res = rn;
                if res <= NEWTON_TOL || (small_step && res <= NEWTON_ACCEPT) {
                    return Ok(x);
                }
                if slow {
                    jac = fd_jac(&x, &fx)?;
                    fresh = true;
                } else {
                    fresh = false;
                }
            }
            None => {
                if fresh {
                    break;
                }
                jac = fd_jac(&x, &fx)?;
                fresh = true;
            }
        }
    }
    if res <= NEWTON_ACCEPT {
        Ok(x)
    } else {
        Err(Error::NoConvergence { residual: res })
    }
}

/// Amplitudes connecting `u_l` to `u_r` through all families.
pub fn riemann_amplitudes(sys: &SystemDef, u_l: &State, u_r: &State) -> Result<Vec<f64>> {
    check_ball(sys, u_l)?;
    check_ball(sys, u_r)?;
    let mid = (u_l + u_r) * 0.5;
    let sd = sys.eigen(&mid)?;
    let s0 = &sd.left * (u_r - u_l);
    if sys.constant_matrix().is_some() {
        return Ok(s0.as_slice().to_vec());
    }
    let groups = sys.groups();
    let f = |s: &DVector<f64>| -> Result<DVector<f64>> {
        let states = compose(sys, u_l, s.as_slice(), &groups)?;
        Ok(states.last().expect("nonempty") - u_r)
    };
    let s = newton(&f, s0, Some(sd.right.clone()))?;
    Ok(s.as_slice().to_vec())
}

/// Interior Riemann problem; returns an exact fan of contact discontinuities.
pub fn solve_riemann(sys: &SystemDef, u_l: &State, u_r: &State) -> Result<WaveFan> {
    if u_l == u_r {
        return Ok(WaveFan::default());
    }
    let s = riemann_amplitudes(sys, u_l, u_r)?;
    build_fan(sys, u_l, &s, &sys.groups(), Some(u_r))
}

/// Groups of the negative (`0..m`) or positive (`m..n`) families.
pub fn sided_groups(sys: &SystemDef, positive: bool) -> Vec<Range<usize>> {
    sys.groups()
        .into_iter()
        .filter(|g| if positive { g.start >= sys.m() } else { g.end <= sys.m() })
        .collect()
}

/// Finds amplitudes on `groups` such that the state `v` reached by
/// `compose(u_anchor, σ)` (forward) or `uncompose(u_anchor, σ)` (backward)
/// satisfies `map(v) = target`. Returns the amplitudes and `v`.
pub fn solve_constraint(
    sys: &SystemDef,
    map: &SmoothMap,
    target: &DVector<f64>,
    u_anchor: &State,
    groups: &[Range<usize>],
    forward: bool,
) -> Result<(Vec<f64>, State)> {
    let n = sys.n();
    let fams: Vec<usize> = groups.iter().flat_map(|g| g.clone()).collect();
    let dim = fams.len();
    if map.out_dim() != dim || target.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "constraint has {} components for {dim} unknowns",
            map.out_dim()
        )));
    }
    if dim == 0 {
        return Ok((vec![0.0; n], u_anchor.clone()));
    }
    check_ball(sys, u_anchor)?;
    let sd = sys.eigen(u_anchor)?;
    let db = map.jacobian(u_anchor, sys.fd_step());
    let rsub = DMatrix::from_fn(n, dim, |i, c| sd.right[(i, fams[c])]);
    let mut jac = &db * &rsub;
    if !forward {
        jac = -jac;
    }
    let sv = jac.clone().svd(false, false).singular_values;
    let smin = sv.min();
    let smax = sv.max();
    if smin < 1e-10 * smax.max(1.0) {
        return Err(Error::BadBoundaryMap { cond: smax / smin.max(1e-300) });
    }
    let defect = map.eval(u_anchor) - target;
    if defect.norm() <= NEWTON_TOL {
        return Ok((vec![0.0; n], u_anchor.clone()));
    }
    let expand = |s: &DVector<f64>| {
        let mut full = vec![0.0; n];
        for (c, &f) in fams.iter().enumerate() {
            full[f] = s[c];
        }
        full
    };
    let state_of = |s: &DVector<f64>| -> Result<State> {
        let full = expand(s);
        if forward {
            Ok(compose(sys, u_anchor, &full, groups)?.pop().unwrap_or_else(|| u_anchor.clone()))
        } else {
            uncompose(sys, u_anchor, &full, groups)
        }
    };
    let f = |s: &DVector<f64>| -> Result<DVector<f64>> { Ok(map.eval(&state_of(s)?) - target) };
    let lu = jac.clone().lu();
    let s0 = lu.solve(&(-&defect)).ok_or(Error::BadBoundaryMap { cond: f64::INFINITY })?;
    let s = if map.as_linear().is_some() && sys.constant_matrix().is_some() {
        s0
    } else {
        newton(&f, s0, Some(jac))?
    };
    let v = state_of(&s)?;
    Ok((expand(&s), v))
}

/// Boundary Riemann problem at `x = 0`: outgoing waves of families `m..n`
/// leave the boundary state `u_b` with `b₁(u_b) = g` and reach `u_inner`.
pub fn solve_boundary_left(sys: &SystemDef, g: &DVector<f64>, u_inner: &State) -> Result<(WaveFan, State)> {
    let groups = sided_groups(sys, true);
    let (s, u_b) = solve_constraint(sys, sys.b1(), g, u_inner, &groups, false)?;
    let fan = build_fan(sys, &u_b, &s, &groups, Some(u_inner))?;
    Ok((fan, u_b))
}

/// Boundary Riemann problem at `x = L`: waves of families `0..m` leave `u_inner`
/// and reach the boundary state `u_b` with `b₂(u_b) = g`.
pub fn solve_boundary_right(sys: &SystemDef, g: &DVector<f64>, u_inner: &State) -> Result<(WaveFan, State)> {
    let groups = sided_groups(sys, false);
    let (s, u_b) = solve_constraint(sys, sys.b2(), g, u_inner, &groups, true)?;
    let fan = build_fan(sys, u_inner, &s, &groups, Some(&u_b))?;
    Ok((fan, u_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::gallery;

    fn v(x: &[f64]) -> State {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let sys = gallery("triangular_ld").unwrap();
        let u = v(&[0.1, 0.2]);
        assert_eq!(contact_curve(&sys, 1, &u, 0.0).unwrap(), u);
    }

    #[test]
    fn linear_curve_is_straight() {
        let sys = gallery("linear2").unwrap();
        let u = contact_curve(&sys, 0, &v(&[0.0, 0.0]), 0.1).unwrap();
        let s = 0.1 / 2f64.sqrt();
        assert!((u - v(&[s, -s])).amax() < 1e-16);
    }

    #[test]
    fn triangular_curve_closed_form() {
        // r₂ ∝ (cos w / 3, 1): along the unit-speed flow w' = 1/|(cos w/3, 1)|.
        // Independent oracle: v − sin(w)/3 is constant along the family-2 curve.
        let sys = gallery("triangular_ld").unwrap();
        let u0 = v(&[0.05, -0.1]);
        let u = contact_curve(&sys, 1, &u0, 0.12).unwrap();
        let z = |u: &State| u[0] - u[1].sin() / 3.0;
        assert!((z(&u) - z(&u0)).abs() < 1e-11);
        // arc length equals σ for unit eigenvectors
        let n = 2000;
        let mut len = 0.0;
        let (w0, w1) = (u0[1], u[1]);
        for i in 0..n {
            let w = w0 + (w1 - w0) * (i as f64 + 0.5) / n as f64;
            len += (1.0 + (w.cos() / 3.0).powi(2)).sqrt() * (w1 - w0) / n as f64;
        }
        assert!((len - 0.12).abs() < 1e-7);
    }

    #[test]
    fn chaplygin_curve_preserves_lambda() {
        let sys = gallery("chaplygin").unwrap();
        let u0 = v(&[1.0, 0.0]);
        let u = contact_curve(&sys, 0, &u0, 0.05).unwrap();
        let l0 = sys.lambda(0, &u0).unwrap();
        assert!((sys.lambda(0, &u).unwrap() - l0).abs() < 1e-9);
        assert!(rh_residual(&sys, &u0, &u, l0) < 1e-9);
    }

    #[test]
    fn linear_riemann_superposition() {
        let sys = gallery("linear2").unwrap();
        let fan = solve_riemann(&sys, &v(&[0.0, 0.0]), &v(&[0.1, 0.0])).unwrap();
        assert_eq!(fan.len(), 2);
        let s = 0.1 / 2f64.sqrt();
        assert!((fan.waves[0].amplitude[0] - s).abs() < 1e-15);
        assert!((fan.waves[1].amplitude[0] - s).abs() < 1e-15);
        assert!((fan.waves[0].speed + 1.0).abs() < 1e-14);
        assert!((fan.waves[1].speed - 2.0).abs() < 1e-14);
    }

    #[test]
    fn equal_states_give_empty_fan() {
        let sys = gallery("chaplygin_tracers2").unwrap();
        let u = sys.center().clone();
        assert!(solve_riemann(&sys, &u, &u).unwrap().is_empty());
    }

    #[test]
    fn triangular_riemann_recomposes() {
        let sys = gallery("triangular_ld").unwrap();
        let (ul, ur) = (v(&[0.0, 0.0]), v(&[0.05, 0.1]));
        let fan = solve_riemann(&sys, &ul, &ur).unwrap();
        assert_eq!(fan.len(), 2);
        let s = fan.amplitudes(2);
        let back = compose(&sys, &ul, &s, &sys.groups()).unwrap();
        assert!((back.last().unwrap() - &ur).norm() < 1e-10);
        for w in &fan.waves {
            assert!(rh_residual(&sys, &w.u_l, &w.u_r, w.speed) < 1e-9);
        }
    }

    #[test]
    fn left_boundary_linear() {
        let sys = gallery("linear2").unwrap();
        let sd = sys.eigen(sys.center()).unwrap();
        let b1 = SmoothMap::linear(DMatrix::from_rows(&[sd.l(1)]));
        let b2 = SmoothMap::linear(DMatrix::from_rows(&[sd.l(0)]));
        let s2 = sys.with_boundary(b1, b2).unwrap();
        let (fan, ub) = solve_boundary_left(&s2, &v(&[0.05]), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(fan.len(), 1);
        assert_eq!(fan.waves[0].family, 1);
        assert!((fan.waves[0].amplitude[0] + 0.05).abs() < 1e-15);
        assert!((s2.b1().eval(&ub)[0] - 0.05).abs() < 1e-15);
        let (fan, ub) = solve_boundary_right(&s2, &v(&[-0.03]), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(fan.len(), 1);
        assert_eq!(fan.waves[0].family, 0);
        assert!((fan.waves[0].amplitude[0] + 0.03).abs() < 1e-15);
        assert!((s2.b2().eval(&ub)[0] + 0.03).abs() < 1e-15);
    }

    #[test]
    fn compatible_boundary_data_is_silent() {
        let sys = gallery("triangular_ld").unwrap();
        let u = v(&[0.02, -0.03]);
        let g = sys.b1().eval(&u);
        let (fan, ub) = solve_boundary_left(&sys, &g, &u).unwrap();
        assert!(fan.is_empty());
        assert_eq!(ub, u);
    }

    #[test]
    fn triangular_left_boundary() {
        let sys = gallery("triangular_ld").unwrap();
        let u = v(&[0.0, 0.0]);
        let (fan, ub) = solve_boundary_left(&sys, &v(&[0.02]), &u).unwrap();
        assert!((sys.b1().eval(&ub)[0] - 0.02).abs() < 1e-10);
        assert_eq!(fan.waves.last().unwrap().u_r, u);
        let s = fan.amplitudes(2);
        let back = compose(&sys, &ub, &s, &sided_groups(&sys, true)).unwrap();
        assert!((back[0].clone() - &u).norm() < 1e-10);
    }

    #[test]
    fn mult2_right_boundary() {
        let sys = gallery("linear3_mult2").unwrap();
        let (fan, ub) = solve_boundary_right(&sys, &v(&[0.01, -0.02]), &v(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(fan.len(), 1);
        assert_eq!(fan.waves[0].amplitude.len(), 2);
        assert!((sys.b2().eval(&ub) - v(&[0.01, -0.02])).norm() < 1e-14);
        let w = &fan.waves[0];
        assert!(rh_residual(&sys, &w.u_l, &w.u_r, w.speed) < 1e-9);
    }

    #[test]
    fn degenerate_boundary_map() {
        let sys = gallery("linear2").unwrap();
        let sd = sys.eigen(sys.center()).unwrap();
        // b₁ = l₁·u annihilates r₂
        let b1 = SmoothMap::linear(DMatrix::from_rows(&[sd.l(0)]));
        let s2 = sys.with_boundary(b1, sys.b2().clone()).unwrap();
        assert!(matches!(
            solve_boundary_left(&s2, &v(&[0.01]), &v(&[0.0, 0.0])),
            Err(Error::BadBoundaryMap { .. })
        ));
    }

    #[test]
    fn leaving_the_ball() {
        let sys = gallery("chaplygin").unwrap();
        let r = flow(&sys, 0, &v(&[1.15, 0.0]), 0.2);
        assert!(matches!(r, Err(Error::LeftBall { .. })));
    }
}
