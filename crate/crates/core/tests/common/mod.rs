//! Random small data shared by the integration tests.
#![allow(dead_code)]

use ldfront::bvfun::{budget, SmallnessBudget};
use ldfront::tracker::{evolve, TrackerConfig};
use ldfront::verify::IbvpData;
use ldfront::{FrontSolution, PiecewiseConstFn, State, SystemDef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Step function on `[a, b]` starting at `start`, with `pieces` cells and jumps of
/// total size `tv` in random directions.
pub fn random_steps(rng: &mut ChaCha8Rng, start: &State, tv: f64, pieces: usize, a: f64, b: f64) -> PiecewiseConstFn {
    let dim = start.len();
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.gen_range(a..b)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let weights: Vec<f64> = (0..breaks.len()).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum::<f64>().max(1e-300);
    let mut u = start.clone();
    let mut values = vec![u.clone()];
    for w in &weights {
        let d = State::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let d = if d.norm() < 1e-6 { State::from_element(dim, 1.0) } else { d };
        u += d.normalize() * (tv * w / total);
        values.push(u.clone());
    }
    PiecewiseConstFn::new(a, b, breaks, values).expect("valid steps")
}

/// Initial data of total variation `0.6 Λ` around the center, boundary data
/// compatible at `t = 0` with total variation `0.4 Λ`.
pub fn random_problem(sys: &SystemDef, lambda: f64, horizon: f64, seed: u64) -> IbvpData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = sys.center().clone();
    let k = rng.gen_range(2..6);
    let initial = random_steps(&mut rng, &c, 0.6 * lambda, k, 0.0, 1.0);
    let b1 = sys.b1().eval(initial.first());
    let b2 = sys.b2().eval(initial.last());
    let (k1, k2) = (rng.gen_range(1..4), rng.gen_range(1..4));
    let g1 = random_steps(&mut rng, &b1, 0.2 * lambda, k1, 0.0, horizon);
    let g2 = random_steps(&mut rng, &b2, 0.2 * lambda, k2, 0.0, horizon);
    IbvpData { initial, g1, g2 }
}

pub fn smallness(sys: &SystemDef, d: &IbvpData) -> SmallnessBudget {
    let b1 = |u: &State| sys.b1().eval(u);
    let b2 = |u: &State| sys.b2().eval(u);
    budget(&d.initial, &d.g1, &d.g2, &b1, &b2, sys.center())
}

pub fn solve(sys: &SystemDef, d: &IbvpData, horizon: f64, eps: f64) -> FrontSolution {
    let run = evolve(sys, &d.initial, &d.g1, &d.g2, horizon, &TrackerConfig::new(eps))
        .unwrap_or_else(|e| panic!("{}: {e}", sys.name()));
    FrontSolution::forward(sys.clone(), run)
}
