use std::fmt;

use nalgebra::DMatrix;

use super::{fd_gradient, SystemDef};
use crate::error::{Error, Result};
use crate::State;

/// Thresholds of the sampled hypothesis checks.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Minimum `|det DH|`.
    pub det: f64,
    /// Minimum separation between distinct eigenvalues.
    pub separation: f64,
    /// Maximum `|Dλᵢ·rᵢ|`.
    pub ld: f64,
    /// Maximum `|Dη A − Dq|`.
    pub entropy: f64,
    /// Minimum boundary determinant.
    pub boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { det: 1e-10, separation: 1e-7, ld: 1e-8, entropy: 1e-6, boundary: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub passed: bool,
    /// Positive when the hypothesis holds with room to spare.
    pub margin: f64,
    pub worst_state: Option<State>,
    pub note: String,
}

impl HypothesisCheck {
    fn new() -> Self {
        HypothesisCheck { passed: true, margin: f64::INFINITY, worst_state: None, note: String::new() }
    }

    fn observe(&mut self, margin: f64, u: &State) {
        if margin < self.margin || margin.is_nan() {
            self.margin = margin;
            self.worst_state = Some(u.clone());
        }
        if !(margin > 0.0) {
            self.passed = false;
        }
    }

    fn fail(&mut self, note: impl Into<String>, u: Option<&State>) {
        self.passed = false;
        if self.note.is_empty() {
            self.note = note.into();
        }
        if self.worst_state.is_none() {
            self.worst_state = u.cloned();
        }
        if self.margin > 0.0 {
            self.margin = f64::NEG_INFINITY;
        }
    }
}

/// Outcome of the sampled (H1)–(H6) checks.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Index `i` holds hypothesis `H(i+1)`.
    pub checks: [HypothesisCheck; 6],
    pub samples: usize,
    pub gap: f64,
    pub lambda_min: Vec<f64>,
    pub lambda_max: Vec<f64>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn into_result(self) -> Result<Self> {
        if let Some((i, c)) = self.checks.iter().enumerate().find(|(_, c)| !c.passed) {
            return Err(Error::HypothesisViolated {
                index: i + 1,
                state: c.worst_state.as_ref().map(|s| s.as_slice().to_vec()).unwrap_or_default(),
                margin: c.margin,
            });
        }
        Ok(self)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples = {}", self.samples)?;
        for (i, c) in self.checks.iter().enumerate() {
            write!(
                f,
                "H{} {} margin = {:.6e}",
                i + 1,
                if c.passed { "pass" } else { "FAIL" },
                c.margin
            )?;
            if !c.note.is_empty() {
                write!(f, " ({})", c.note)?;
            }
            writeln!(f)?;
        }
        writeln!(f, "gap c = {:.6e}", self.gap)?;
        for i in 0..self.lambda_min.len() {
            writeln!(
                f,
                "lambda_{} in [{:.6e}, {:.6e}]",
                i + 1,
                self.lambda_min[i],
                self.lambda_max[i]
            )?;
        }
        Ok(())
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic low-discrepancy points of the closed ball; the center comes first.
/// `seed` shifts the Halton index.
pub fn halton_ball(center: &State, radius: f64, count: usize, seed: u64) -> Vec<State> {
    let n = center.len();
    assert!(n <= PRIMES.len(), "Halton sampling supports up to {} dimensions", PRIMES.len());
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(center.clone());
    let mut idx = 1 + seed.wrapping_mul(7919);
    while out.len() < count {
        let p = State::from_fn(n, |i, _| 2.0 * radical_inverse(idx, PRIMES[i]) - 1.0);
        idx += 1;
        if p.norm() <= 1.0 {
            out.push(center + radius * p);
        }
    }
    out
}

pub(super) fn check(sys: &SystemDef, samples: usize, seed: u64, tol: &Tolerances) -> ValidationReport {
    let n = sys.n();
    let m = sys.m();
    let pts = halton_ball(sys.center(), sys.r_ball(), samples.max(1), seed);
    let mut h: [HypothesisCheck; 6] = std::array::from_fn(|_| HypothesisCheck::new());
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut gap = f64::INFINITY;
    let dstep = 1e-3 * sys.r_ball();
    let groups = sys.groups();

    for u in &pts {
        // H1
        let dh = sys.dh(u);
        let det = dh.determinant().abs();
        h[0].observe(det - tol.det, u);
        let sd = match sys.eigen(u) {
            Ok(sd) => sd,
            Err(Error::ComplexSpectrum { imag }) => {
                h[0].fail(format!("complex eigenvalues (imaginary part {imag:e})"), Some(u));
                continue;
            }
            Err(Error::SingularDH { .. }) => {
                h[0].fail("DH singular", Some(u));
                continue;
            }
            Err(e) => {
                h[1].fail(e.to_string(), Some(u));
                continue;
            }
        };
        // H2
        let a = sys.mixed_matrix(u).unwrap_or_else(|_| DMatrix::zeros(n, n));
        let mut ev: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let mut spread: f64 = 0.0;
        for g in &groups {
            for j in g.clone() {
                spread = spread.max((ev[j] - sd.lambdas[j]).abs());
            }
        }
        let sep = sd
            .lambdas
            .windows(2)
            .enumerate()
            .filter(|(i, _)| sys.group_of(*i) != sys.group_of(i + 1))
            .map(|(_, w)| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        h[1].observe((sep - tol.separation).min(tol.separation - spread), u);
        for i in 0..n {
            lo[i] = lo[i].min(sd.lambdas[i]);
            hi[i] = hi[i].max(sd.lambdas[i]);
        }
        // H3
        let neg = if m > 0 { -sd.lambdas[m - 1] } else { f64::INFINITY };
        let pos = if m < n { sd.lambdas[m] } else { f64::INFINITY };
        let g3 = neg.min(pos);
        gap = gap.min(g3);
        h[2].observe(g3, u);
        // H4
        let mut ld: f64 = 0.0;
        for i in 0..n {
            let r = sd.r(i);
            let lam = |s: f64| sys.lambda(i, &(u + s * &r));
            match (lam(-2.0 * dstep), lam(-dstep), lam(dstep), lam(2.0 * dstep)) {
                (Ok(a), Ok(b), Ok(c), Ok(d)) => {
                    ld = ld.max(((a - d + 8.0 * (c - b)) / (12.0 * dstep)).abs());
                }
                _ => ld = f64::INFINITY,
            }
        }
        h[3].observe(tol.ld - ld, u);
        // H5
        if let Some(ep) = sys.entropy() {
            let gh = 1e-4 * sys.r_ball();
            let deta = fd_gradient(&*ep.eta, u, gh);
            let dq = fd_gradient(&*ep.q, u, gh);
            let res = (deta.transpose() * &a - dq.transpose()).amax();
            h[4].observe(tol.entropy - res, u);
        }
        // H6
        let (db1, db2) = (sys.b1().jacobian(u, sys.fd_step()), sys.b2().jacobian(u, sys.fd_step()));
        let d1 = if m < n { (&db1 * sd.right.columns(m, n - m)).determinant().abs() } else { 1.0 };
        let d2 = if m > 0 { (&db2 * sd.right.columns(0, m)).determinant().abs() } else { 1.0 };
        h[5].observe(d1.min(d2) - tol.boundary, u);
    }
    if sys.entropy().is_none() {
        h[4].fail("no entropy pair", None);
    }
    ValidationReport {
        checks: h,
        samples: pts.len(),
        gap: 0.95 * gap,
        lambda_min: lo,
        lambda_max: hi,
    }
}
