//! Front tracking solutions and boundary control synthesis for one-dimensional
//! hyperbolic systems of conservation laws
//!
//! ```text
//! ∂ₜH(u) + ∂ₓG(u) = 0,   0 < x < L,
//! b₁(u) = g₁(t) at x = 0,   b₂(u) = g₂(t) at x = L,
//! ```
//!
//! whose characteristic fields are all linearly degenerate (one eigenvalue may
//! carry constant multiplicity). The crate is organised bottom-up:
//!
//! - [`systems`]: system definitions, spectral data, hypothesis checks, gallery.
//! - [`bvfun`]: piecewise-constant BV functions of one variable.
//! - [`riemann`]: contact curves, the contact manifold of the multiple family,
//!   interior and boundary Riemann solvers.
//! - [`tracker`]: the event-driven ε-approximate front tracking engine.
//! - [`directional`]: sideways (x as time) and backward problems, gluing and
//!   comparisons on determinate triangles.
//! - [`control`]: the two-sided, one-sided and reduced-control pipelines.
//! - [`verify`]: weak/entropy residuals, initial-boundary clauses and
//!   reference solutions.

pub mod bvfun;
pub mod config;
pub mod control;
pub mod directional;
pub mod error;
pub mod riemann;
pub mod systems;
pub mod tracker;
pub mod verify;

/// A point of state space ℝⁿ.
pub type State = nalgebra::DVector<f64>;

pub use bvfun::PiecewiseConstFn;
pub use error::{Error, Result};
pub use systems::SystemDef;
pub use tracker::{FrontSolution, TrackerConfig};
