//! Error type shared by every module of the crate.

use thiserror::Error;

/// Phase of a control pipeline, used to tag propagated failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Forward,
    Backward,
    Leftward,
    Rightward,
    Glue,
    Extract,
    Resimulate,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Phase::Forward => "forward",
            Phase::Backward => "backward",
            Phase::Leftward => "leftward",
            Phase::Rightward => "rightward",
            Phase::Glue => "glue",
            Phase::Extract => "extract",
            Phase::Resimulate => "resimulate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("DH(u) is singular (|det| = {det:e})")]
    SingularDH { det: f64 },
    #[error("DG(u) is singular (|det| = {det:e})")]
    SingularDG { det: f64 },
    #[error("spectrum is not real: imaginary part {imag:e}")]
    ComplexSpectrum { imag: f64 },
    #[error("multiplicity pattern mismatch: {0}")]
    Multiplicity(String),
    #[error("hypothesis (H{index}) violated at {state:?}: margin {margin:e}")]
    HypothesisViolated { index: usize, state: Vec<f64>, margin: f64 },
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("empty domain [{a}, {b}]")]
    EmptyDomain { a: f64, b: f64 },
    #[error("domain mismatch: [{a0}, {b0}] vs [{a1}, {b1}]")]
    DomainMismatch { a0: f64, b0: f64, a1: f64, b1: f64 },
    #[error("state left the ball (|u - c| = {norm:e} > {radius:e})")]
    LeftBall { norm: f64, radius: f64 },
    #[error("curve integration step size collapsed")]
    CurveStiff,
    #[error("Newton iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("boundary map is degenerate along the outgoing eigenvectors (cond {cond:e})")]
    BadBoundaryMap { cond: f64 },
    #[error("smallness budget {total:e} exceeds the cap {cap:e}")]
    BudgetExceeded { total: f64, cap: f64 },
    #[error("state escaped the working ball at t = {t}, x = {x}")]
    BallEscape { t: f64, x: f64 },
    #[error("front count {count} exceeds cap {cap}")]
    EventOverflow { count: usize, cap: usize },
    #[error("non-physical strength {strength:e} would exceed epsilon {epsilon:e}")]
    EpsilonBudgetBlown { strength: f64, epsilon: f64 },
    #[error("point ({t}, {x}) lies outside the solution domain")]
    OutOfDomain { t: f64, x: f64 },
    #[error("interface traces differ by {distance:e} (tolerance {tol:e})")]
    InterfaceMismatch { distance: f64, tol: f64 },
    #[error("test function support is not inside the open domain")]
    SupportViolation,
    #[error("system carries no entropy pair")]
    NoEntropyPair,
    #[error("no oracle available: {0}")]
    NoOracle(String),
    #[error("control time {t} does not exceed the threshold {threshold} ({which})")]
    TimeTooShort { t: f64, threshold: f64, which: &'static str },
    #[error("rank condition {0} fails")]
    RankCondition(&'static str),
    #[error("config error at line {line}, column {column}: {message}")]
    Config { line: usize, column: usize, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{phase} phase: {source}")]
    InPhase {
        phase: Phase,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_phase(self, phase: Phase) -> Self {
        Error::InPhase { phase, source: Box::new(self) }
    }

    /// Innermost error, skipping phase tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::InPhase { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
