//! Hyperbolic systems `∂ₜH(u) + ∂ₓG(u) = 0` with boundary maps, their spectral
//! data, hypothesis validation and a gallery of concrete examples.

mod eigen;
mod gallery;
mod validate;

use std::fmt;
use std::ops::Range;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::State;

pub use eigen::{spectral_decomposition, SpectralData};
pub use gallery::{
    chaplygin_at, gallery, gallery_names, linear_system, quadratic_entropy, GALLERY,
};
pub use validate::{halton_ball, HypothesisCheck, Tolerances, ValidationReport};

pub type VecFn = Arc<dyn Fn(&State) -> State + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&State) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&State) -> f64 + Send + Sync>;

/// Smooth map ℝⁿ → ℝᵈ with an optional analytic Jacobian.
#[derive(Clone)]
pub struct SmoothMap {
    out_dim: usize,
    f: VecFn,
    jac: Option<MatFn>,
    linear: Option<DMatrix<f64>>,
}

impl SmoothMap {
    pub fn new(out_dim: usize, f: impl Fn(&State) -> State + Send + Sync + 'static) -> Self {
        SmoothMap { out_dim, f: Arc::new(f), jac: None, linear: None }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&State) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    /// `u ↦ M u`.
    pub fn linear(m: DMatrix<f64>) -> Self {
        let m1 = m.clone();
        let m2 = m.clone();
        SmoothMap {
            out_dim: m.nrows(),
            f: Arc::new(move |u| &m1 * u),
            jac: Some(Arc::new(move |_| m2.clone())),
            linear: Some(m),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::linear(DMatrix::identity(n, n))
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn eval(&self, u: &State) -> State {
        (self.f)(u)
    }

    /// The matrix if the map is known to be linear.
    pub fn as_linear(&self) -> Option<&DMatrix<f64>> {
        self.linear.as_ref()
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    /// Analytic Jacobian if available, else 4th-order central differences with step `h`.
    pub fn jacobian(&self, u: &State, h: f64) -> DMatrix<f64> {
        match &self.jac {
            Some(j) => j(u),
            None => fd_jacobian(&*self.f, u, h),
        }
    }

    pub fn negated(&self) -> SmoothMap {
        let f = self.f.clone();
        let jac = self.jac.clone();
        SmoothMap {
            out_dim: self.out_dim,
            f: Arc::new(move |u| -f(u)),
            jac: jac.map(|j| Arc::new(move |u: &State| -j(u)) as MatFn),
            linear: self.linear.as_ref().map(|m| -m),
        }
    }

    /// Rows `idx` of the map.
    pub fn select_rows(&self, idx: &[usize]) -> SmoothMap {
        let f = self.f.clone();
        let jac = self.jac.clone();
        let i1: Vec<usize> = idx.to_vec();
        let i2 = i1.clone();
        SmoothMap {
            out_dim: idx.len(),
            f: Arc::new(move |u| {
                let v = f(u);
                DVector::from_iterator(i1.len(), i1.iter().map(|&i| v[i]))
            }),
            jac: jac.map(|j| {
                Arc::new(move |u: &State| j(u).select_rows(i2.iter())) as MatFn
            }),
            linear: self.linear.as_ref().map(|m| m.select_rows(idx.iter())),
        }
    }

    /// Vertical concatenation `u ↦ (f(u), g(u))`.
    pub fn stack(&self, other: &SmoothMap) -> SmoothMap {
        let (f1, f2) = (self.f.clone(), other.f.clone());
        let (d1, d2) = (self.out_dim, other.out_dim);
        let jac = match (&self.jac, &other.jac) {
            (Some(j1), Some(j2)) => {
                let (j1, j2) = (j1.clone(), j2.clone());
                Some(Arc::new(move |u: &State| {
                    let (a, b) = (j1(u), j2(u));
                    let mut m = DMatrix::zeros(d1 + d2, a.ncols());
                    m.rows_mut(0, d1).copy_from(&a);
                    m.rows_mut(d1, d2).copy_from(&b);
                    m
                }) as MatFn)
            }
            _ => None,
        };
        let linear = match (&self.linear, &other.linear) {
            (Some(a), Some(b)) => {
                let mut m = DMatrix::zeros(d1 + d2, a.ncols());
                m.rows_mut(0, d1).copy_from(a);
                m.rows_mut(d1, d2).copy_from(b);
                Some(m)
            }
            _ => None,
        };
        SmoothMap {
            out_dim: d1 + d2,
            f: Arc::new(move |u| {
                let (a, b) = (f1(u), f2(u));
                let mut v = DVector::zeros(d1 + d2);
                v.rows_mut(0, d1).copy_from(&a);
                v.rows_mut(d1, d2).copy_from(&b);
                v
            }),
            jac,
            linear,
        }
    }

    /// Affine forms `u ↦ rows·(u − c)`.
    pub fn affine_forms(rows: DMatrix<f64>, c: &State) -> SmoothMap {
        let offset = &rows * c;
        let r1 = rows.clone();
        let r2 = rows.clone();
        SmoothMap {
            out_dim: rows.nrows(),
            f: Arc::new(move |u| &r1 * u - &offset),
            jac: Some(Arc::new(move |_| r2.clone())),
            linear: if c.iter().all(|&x| x == 0.0) { Some(rows) } else { None },
        }
    }
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("out_dim", &self.out_dim)
            .field("analytic_jacobian", &self.jac.is_some())
            .field("linear", &self.linear.is_some())
            .finish()
    }
}

/// 4th-order central-difference Jacobian.
pub fn fd_jacobian(f: &dyn Fn(&State) -> State, u: &State, h: f64) -> DMatrix<f64> {
    let n = u.len();
    let f0 = f(u);
    let mut j = DMatrix::zeros(f0.len(), n);
    let mut v = u.clone();
    for c in 0..n {
        let x = u[c];
        let mut eval = |s: f64| {
            v[c] = x + s;
            f(&v)
        };
        let col = (eval(-2.0 * h) - eval(2.0 * h) + 8.0 * (eval(h) - eval(-h))) / (12.0 * h);
        v[c] = x;
        j.set_column(c, &col);
    }
    j
}

/// 4th-order central-difference gradient of a scalar function.
pub fn fd_gradient(f: &dyn Fn(&State) -> f64, u: &State, h: f64) -> DVector<f64> {
    let n = u.len();
    let mut g = DVector::zeros(n);
    let mut v = u.clone();
    for c in 0..n {
        let x = u[c];
        let mut eval = |s: f64| {
            v[c] = x + s;
            f(&v)
        };
        g[c] = (eval(-2.0 * h) - eval(2.0 * h) + 8.0 * (eval(h) - eval(-h))) / (12.0 * h);
        v[c] = x;
    }
    g
}

/// Entropy pair `(η, q)` with `Dη (DH)⁻¹DG = Dq`.
#[derive(Clone)]
pub struct EntropyPair {
    pub eta: ScalarFn,
    pub q: ScalarFn,
}

impl EntropyPair {
    pub fn new(
        eta: impl Fn(&State) -> f64 + Send + Sync + 'static,
        q: impl Fn(&State) -> f64 + Send + Sync + 'static,
    ) -> Self {
        EntropyPair { eta: Arc::new(eta), q: Arc::new(q) }
    }
}

impl fmt::Debug for EntropyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("EntropyPair")
    }
}

/// Position `k` (0-based index of the first eigenvalue of the block) and size `p`
/// of the multiple eigenvalue. `p = 1` means every eigenvalue is simple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplicity {
    pub k: usize,
    pub p: usize,
}

impl Multiplicity {
    pub const SIMPLE: Multiplicity = Multiplicity { k: 0, p: 1 };
}

/// Extremes of the spectrum over the working ball.
#[derive(Debug, Clone)]
pub struct BallStats {
    pub lambda_min: Vec<f64>,
    pub lambda_max: Vec<f64>,
    /// `sup |λᵢ|` over the ball.
    pub sup_abs: f64,
    /// Gap constant `c` with `λ_m < −c < 0 < c < λ_{m+1}`.
    pub gap: f64,
    pub samples: usize,
}

/// Raw ingredients of a [`SystemDef`].
#[derive(Clone)]
pub struct SystemParts {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub mult: Multiplicity,
    pub h: SmoothMap,
    pub g: SmoothMap,
    pub center: State,
    pub r_ball: f64,
    pub b1: SmoothMap,
    pub b2: SmoothMap,
    pub entropy: Option<EntropyPair>,
    /// Right eigenvectors at the center fixing the orientation of the frame.
    pub anchors: Option<Vec<State>>,
}

/// A validated-on-demand hyperbolic system with boundary maps.
#[derive(Clone)]
pub struct SystemDef {
    name: String,
    n: usize,
    m: usize,
    mult: Multiplicity,
    h: SmoothMap,
    g: SmoothMap,
    center: State,
    r_ball: f64,
    b1: SmoothMap,
    b2: SmoothMap,
    entropy: Option<EntropyPair>,
    anchors: Arc<Vec<State>>,
    constant: Option<Arc<(DMatrix<f64>, SpectralData)>>,
    stats: Arc<OnceLock<BallStats>>,
}

impl fmt::Debug for SystemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDef")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("mult", &self.mult)
            .field("center", &self.center.as_slice())
            .field("r_ball", &self.r_ball)
            .finish()
    }
}

impl SystemDef {
    pub fn from_parts(parts: SystemParts) -> Result<Self> {
        let SystemParts { name, n, m, mult, h, g, center, r_ball, b1, b2, entropy, anchors } =
            parts;
        if n == 0 || center.len() != n {
            return Err(Error::InvalidArgument(format!(
                "state dimension {n} and center length {} disagree",
                center.len()
            )));
        }
        if m > n {
            return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
        }
        if mult.p == 0 || mult.k + mult.p > n {
            return Err(Error::Multiplicity(format!(
                "block k = {}, p = {} does not fit n = {n}",
                mult.k, mult.p
            )));
        }
        if mult.p > 1 && mult.k < m && mult.k + mult.p > m {
            return Err(Error::Multiplicity("multiple eigenvalue straddles zero".into()));
        }
        if !(r_ball > 0.0) {
            return Err(Error::InvalidArgument(format!("ball radius {r_ball} must be positive")));
        }
        if b1.out_dim() != n - m || b2.out_dim() != m {
            return Err(Error::InvalidArgument(format!(
                "boundary maps must have {} and {m} components, got {} and {}",
                n - m,
                b1.out_dim(),
                b2.out_dim()
            )));
        }
        let mut sys = SystemDef {
            name,
            n,
            m,
            mult,
            h,
            g,
            center,
            r_ball,
            b1,
            b2,
            entropy,
            anchors: Arc::new(Vec::new()),
            constant: None,
            stats: Arc::new(OnceLock::new()),
        };
        let a0 = sys.mixed_matrix(&sys.center.clone())?;
        let frame = spectral_decomposition(&a0, mult, anchors.as_deref())?;
        sys.anchors = Arc::new((0..n).map(|i| frame.r(i)).collect());
        if let (Some(_), Some(_)) = (sys.h.as_linear(), sys.g.as_linear()) {
            sys.constant = Some(Arc::new((a0, frame)));
        }
        Ok(sys)
    }

    pub fn parts(&self) -> SystemParts {
        SystemParts {
            name: self.name.clone(),
            n: self.n,
            m: self.m,
            mult: self.mult,
            h: self.h.clone(),
            g: self.g.clone(),
            center: self.center.clone(),
            r_ball: self.r_ball,
            b1: self.b1.clone(),
            b2: self.b2.clone(),
            entropy: self.entropy.clone(),
            anchors: Some(self.anchors.as_ref().clone()),
        }
    }

    /// Same conservation law with different boundary maps.
    pub fn with_boundary(&self, b1: SmoothMap, b2: SmoothMap) -> Result<Self> {
        if b1.out_dim() != self.n - self.m || b2.out_dim() != self.m {
            return Err(Error::InvalidArgument(format!(
                "boundary maps must have {} and {} components, got {} and {}",
                self.n - self.m,
                self.m,
                b1.out_dim(),
                b2.out_dim()
            )));
        }
        let mut s = self.clone();
        s.b1 = b1;
        s.b2 = b2;
        Ok(s)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// Number of negative eigenvalues.
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn mult(&self) -> Multiplicity {
        self.mult
    }
    pub fn h(&self) -> &SmoothMap {
        &self.h
    }
    pub fn g(&self) -> &SmoothMap {
        &self.g
    }
    pub fn b1(&self) -> &SmoothMap {
        &self.b1
    }
    pub fn b2(&self) -> &SmoothMap {
        &self.b2
    }
    pub fn center(&self) -> &State {
        &self.center
    }
    pub fn r_ball(&self) -> f64 {
        self.r_ball
    }
    pub fn entropy(&self) -> Option<&EntropyPair> {
        self.entropy.as_ref()
    }
    pub fn anchors(&self) -> &[State] {
        &self.anchors
    }

    /// `(DH, DG)` if both fluxes are linear.
    pub fn linear_fluxes(&self) -> Option<(&DMatrix<f64>, &DMatrix<f64>)> {
        Some((self.h.as_linear()?, self.g.as_linear()?))
    }

    /// The constant matrix `(DH)⁻¹DG` of a linear system.
    pub fn constant_matrix(&self) -> Option<&DMatrix<f64>> {
        self.constant.as_ref().map(|c| &c.0)
    }

    pub fn h_is_identity(&self) -> bool {
        self.h.as_linear().is_some_and(|m| m == &DMatrix::<f64>::identity(self.n, self.n))
    }

    pub fn fd_step(&self) -> f64 {
        1e-5 * self.r_ball
    }

    pub fn eval_h(&self, u: &State) -> State {
        self.h.eval(u)
    }
    pub fn eval_g(&self, u: &State) -> State {
        self.g.eval(u)
    }
    pub fn dh(&self, u: &State) -> DMatrix<f64> {
        self.h.jacobian(u, self.fd_step())
    }
    pub fn dg(&self, u: &State) -> DMatrix<f64> {
        self.g.jacobian(u, self.fd_step())
    }

    /// `(DH(u))⁻¹ DG(u)`.
    pub fn mixed_matrix(&self, u: &State) -> Result<DMatrix<f64>> {
        if let Some(c) = &self.constant {
            return Ok(c.0.clone());
        }
        let dh = self.dh(u);
        let scale = dh.amax().max(1.0).powi(self.n as i32);
        let lu = dh.lu();
        let det = lu.determinant();
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::SingularDH { det: det.abs() });
        }
        let dg = self.dg(u);
        lu.solve(&dg).ok_or(Error::SingularDH { det: det.abs() })
    }

    pub fn eigen(&self, u: &State) -> Result<SpectralData> {
        if let Some(c) = &self.constant {
            return Ok(c.1.clone());
        }
        let a = self.mixed_matrix(u)?;
        spectral_decomposition(&a, self.mult, Some(&self.anchors))
    }

    /// Eigenvalue of family `i` at `u`.
    pub fn lambda(&self, i: usize, u: &State) -> Result<f64> {
        Ok(self.eigen(u)?.lambdas[i])
    }

    /// Index ranges of the families: the multiple block is one group.
    pub fn groups(&self) -> Vec<Range<usize>> {
        family_groups(self.n, self.mult)
    }

    /// Group index containing family `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.groups().iter().position(|r| r.contains(&i)).expect("family out of range")
    }

    /// `|u − center|`.
    pub fn dist_from_center(&self, u: &State) -> f64 {
        (u - &self.center).norm()
    }

    /// Spectral extremes over the ball (cached, 1024 deterministic samples).
    pub fn ball_stats(&self) -> &BallStats {
        self.stats.get_or_init(|| self.compute_stats(1024))
    }

    fn compute_stats(&self, count: usize) -> BallStats {
        let n = self.n;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        let mut gap = f64::INFINITY;
        let mut used = 0;
        for u in halton_ball(&self.center, self.r_ball, count, 0) {
            let Ok(sd) = self.eigen(&u) else { continue };
            used += 1;
            for i in 0..n {
                lo[i] = lo[i].min(sd.lambdas[i]);
                hi[i] = hi[i].max(sd.lambdas[i]);
            }
            let neg = if self.m > 0 { -sd.lambdas[self.m - 1] } else { f64::INFINITY };
            let pos = if self.m < n { sd.lambdas[self.m] } else { f64::INFINITY };
            gap = gap.min(neg.min(pos));
        }
        let sup_abs = lo.iter().chain(hi.iter()).fold(0.0f64, |a, &b| a.max(b.abs()));
        BallStats { lambda_min: lo, lambda_max: hi, sup_abs, gap: 0.95 * gap, samples: used }
    }

    /// Non-physical front speed `λ̂ = 2 sup |λᵢ|`.
    pub fn lambda_hat(&self) -> f64 {
        2.0 * self.ball_stats().sup_abs
    }

    /// Deterministic hypothesis check; never fails.
    pub fn check(&self, samples: usize, seed: u64, tol: &Tolerances) -> ValidationReport {
        validate::check(self, samples, seed, tol)
    }

    /// Hypothesis check that errors on the first violated hypothesis.
    pub fn validate(&self, samples: usize) -> Result<ValidationReport> {
        let rep = self.check(samples, 0, &Tolerances::default());
        rep.into_result()
    }
}

pub(crate) fn family_groups(n: usize, mult: Multiplicity) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if mult.p > 1 && i == mult.k {
            out.push(i..i + mult.p);
            i += mult.p;
        } else {
            out.push(i..i + 1);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_layout() {
        assert_eq!(family_groups(3, Multiplicity { k: 0, p: 2 }), vec![0..2, 2..3]);
        assert_eq!(family_groups(4, Multiplicity { k: 1, p: 2 }), vec![0..1, 1..3, 3..4]);
        assert_eq!(family_groups(2, Multiplicity::SIMPLE), vec![0..1, 1..2]);
    }

    #[test]
    fn fd_matches_analytic() {
        let f = |u: &State| DVector::from_vec(vec![u[0].sin() * u[1], u[1].exp()]);
        let u = DVector::from_vec(vec![0.3, -0.2]);
        let j = fd_jacobian(&f, &u, 1e-4);
        let exact = DMatrix::from_row_slice(
            2,
            2,
            &[0.3f64.cos() * -0.2, 0.3f64.sin(), 0.0, (-0.2f64).exp()],
        );
        assert!((j - exact).amax() < 1e-12);
    }

    #[test]
    fn stack_and_select() {
        let a = SmoothMap::linear(DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
        let b = SmoothMap::linear(DMatrix::from_row_slice(1, 2, &[3.0, 4.0]));
        let s = a.stack(&b);
        let u = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(s.eval(&u).as_slice(), &[3.0, 7.0]);
        assert_eq!(s.select_rows(&[1]).eval(&u).as_slice(), &[7.0]);
        assert_eq!(s.as_linear().unwrap().nrows(), 2);
    }
}
