//! Scenario files: flat `key = value` with dotted keys.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ldfront::bvfun::sample_bv;
use ldfront::config::{parse_system, Entry, KvDoc};
use ldfront::control::Mode;
use ldfront::systems::{gallery, gallery_names};
use ldfront::{Error, PiecewiseConstFn, Result, State, SystemDef, TrackerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Simulate,
    Control(Mode),
    Verify,
}

impl Task {
    pub fn name(&self) -> String {
        match self {
            Task::Simulate => "simulate".into(),
            Task::Control(m) => format!("control:{m}"),
            Task::Verify => "verify".into(),
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "simulate" => Ok(Task::Simulate),
            "verify" => Ok(Task::Verify),
            _ => s
                .strip_prefix("control:")
                .and_then(|m| m.parse().ok())
                .map(Task::Control)
                .ok_or_else(|| format!("unknown mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleChoice {
    Auto,
    Exact,
    Godunov,
    None,
}

impl FromStr for OracleChoice {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "auto" => Ok(OracleChoice::Auto),
            "exact" => Ok(OracleChoice::Exact),
            "godunov" => Ok(OracleChoice::Godunov),
            "none" => Ok(OracleChoice::None),
            _ => Err(()),
        }
    }
}

/// Data description as written in the scenario, kept for the manifest.
#[derive(Debug, Clone)]
pub struct DataSpec {
    pub text: String,
    pub value: PiecewiseConstFn,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub system_ref: String,
    pub system: SystemDef,
    pub task: Task,
    pub length: f64,
    pub horizon: f64,
    pub epsilon: f64,
    pub mesh: f64,
    pub seed: u64,
    pub initial: DataSpec,
    pub target: Option<DataSpec>,
    pub g1: Option<DataSpec>,
    pub g2: Option<DataSpec>,
    pub given: Option<DataSpec>,
    pub tracker: TrackerConfig,
    pub reduced_rows: usize,
    pub force: bool,
    pub gap_steps: usize,
    pub interface: Option<f64>,
    pub oracle: OracleChoice,
    pub cells: usize,
    pub cfl: f64,
    pub samples: usize,
    pub out_dir: PathBuf,
    pub svg: bool,
}

/// Every key a scenario may contain.
pub const KEYS: &[(&str, &str)] = &[
    ("system", "gallery name or path to a system file"),
    ("mode", "simulate | control:two_sided | control:one_sided | control:two_sided_less | verify"),
    ("length", "domain length L (default 1)"),
    ("horizon", "final time T"),
    ("epsilon", "front tracking accuracy ε (default 1e-3)"),
    ("mesh", "sampling width for `sin` data (default 0: exact data)"),
    ("seed", "seed for `random` data (default 0)"),
    ("data.initial", "initial state ū (default: ball center)"),
    ("data.target", "target state u₁ for control (default: ball center)"),
    ("data.g1", "left boundary data for simulate/verify (default: b₁ of ū(0+))"),
    ("data.g2", "right boundary data for simulate/verify (default: b₂ of ū(L−))"),
    ("data.given", "g₁ (one-sided) or g̃₂ (reduced controls); default: value at the center"),
    ("control.reduced_rows", "rows of b₂ kept as given data under reduced controls (default 1)"),
    ("control.force", "run below the threshold (default false)"),
    ("control.gap_steps", "interface staircase cells (default 4)"),
    ("control.interface", "interface position for two-sided control (default L/2)"),
    ("tracker.gen_cap", "generation cap for accurate interactions"),
    ("tracker.rho_simp", "strength threshold for accurate interactions"),
    ("tracker.front_cap", "maximum number of live fronts"),
    ("tracker.event_cap", "maximum number of events"),
    ("tracker.delta", "cap on the smallness functional"),
    ("tracker.ball_margin", "fraction of the ball states must stay in"),
    ("tracker.lambda_hat", "non-physical front speed"),
    ("verify.oracle", "auto | exact | godunov | none (default auto)"),
    ("verify.cells", "finite-volume cells (default 4096)"),
    ("verify.cfl", "finite-volume CFL number (default 0.45)"),
    ("verify.samples", "number of sampled times (default 10)"),
    ("output.dir", "output directory (default `out`; LDFRONT_OUT overrides)"),
    ("output.svg", "write diagram.svg (default false)"),
];

pub fn resolve_system(reference: &str, base: &Path) -> Result<SystemDef> {
    if gallery_names().contains(&reference) {
        return gallery(reference);
    }
    let path = base.join(reference);
    match std::fs::read_to_string(&path) {
        Ok(text) => parse_system(&text),
        Err(_) => Err(Error::UnknownSystem(reference.to_string())),
    }
}

fn bool_value(e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(e.err(format!("expected true or false, got `{v}`"))),
    }
}

fn positive(e: &Entry) -> Result<f64> {
    let v: f64 = e.parse()?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(e.err(format!("expected a positive number, got `{}`", e.value)))
    }
}

struct DataContext<'a> {
    dim: usize,
    domain: (f64, f64),
    mesh: f64,
    seed: u64,
    base: &'a Path,
}

/// Data grammar:
/// - `center` the ball center (its image under `b` for boundary data);
/// - `v₁ … v_d` constant;
/// - `v… @x v… @x v…` piecewise constant with breaks at the `@x` markers;
/// - `sin a₁ … a_d` the offset `aᵢ sin(π s / ℓ)` sampled at `mesh` on a domain of length ℓ;
/// - `random Λ k` a random step function with `k` pieces and total variation `Λ`;
/// - `file:path` a CSV written by `PiecewiseConstFn::to_csv`.
///
/// `sin` and `random` are offsets from the system's ball center projected to the
/// data dimension: for boundary data `b(center)` is used.
fn parse_data(e: &Entry, cx: &DataContext, offset: &State) -> Result<PiecewiseConstFn> {
    let text = e.value.trim();
    let (a, b) = cx.domain;
    let f = if text == "center" {
        PiecewiseConstFn::constant(a, b, offset.clone())?
    } else if let Some(path) = text.strip_prefix("file:") {
        let body = std::fs::read_to_string(cx.base.join(path.trim()))
            .map_err(|err| e.err(format!("cannot read `{}`: {err}", path.trim())))?;
        let f = PiecewiseConstFn::from_csv(&body).map_err(|err| e.err(err.to_string()))?;
        let (fa, fb) = f.domain();
        if (fa - a).abs() > 1e-12 || (fb - b).abs() > 1e-12 {
            return Err(e.err(format!("file domain [{fa}, {fb}] differs from [{a}, {b}]")));
        }
        f
    } else if let Some(rest) = text.strip_prefix("sin") {
        let amp = State::from_vec(ldfront::config::split_numbers(rest).map_err(|m| e.err(m))?);
        if amp.len() != cx.dim {
            return Err(e.err(format!("expected {} amplitudes", cx.dim)));
        }
        if !(cx.mesh > 0.0) {
            return Err(e.err("`sin` data needs mesh > 0"));
        }
        let ell = b - a;
        sample_bv(|x| offset + &amp * (std::f64::consts::PI * (x - a) / ell).sin(), a, b, cx.mesh)?
    } else if let Some(rest) = text.strip_prefix("random") {
        let nums = ldfront::config::split_numbers(rest).map_err(|m| e.err(m))?;
        let [tv, k] = nums[..] else {
            return Err(e.err("expected `random <total variation> <pieces>`"));
        };
        if !(tv >= 0.0) || k < 1.0 || k.fract() != 0.0 {
            return Err(e.err("need total variation >= 0 and a positive integer piece count"));
        }
        random_steps(cx.dim, tv, k as usize, cx.seed, a, b, offset)?
    } else {
        steps(e, cx.dim, a, b)?
    };
    if f.dim() != cx.dim {
        return Err(e.err(format!("data has dimension {}, expected {}", f.dim(), cx.dim)));
    }
    Ok(f)
}

fn steps(e: &Entry, dim: usize, a: f64, b: f64) -> Result<PiecewiseConstFn> {
    let mut breaks = Vec::new();
    let mut values = Vec::new();
    let mut current = Vec::new();
    for tok in e.value.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
        if let Some(x) = tok.strip_prefix('@') {
            if current.len() != dim {
                return Err(e.err(format!("each piece needs {dim} values")));
            }
            values.push(State::from_vec(std::mem::take(&mut current)));
            breaks.push(x.parse::<f64>().map_err(|_| e.err(format!("bad break `{tok}`")))?);
        } else {
            current.push(tok.parse::<f64>().map_err(|_| e.err(format!("bad number `{tok}`")))?);
        }
    }
    if current.len() != dim {
        return Err(e.err(format!("each piece needs {dim} values")));
    }
    values.push(State::from_vec(current));
    PiecewiseConstFn::new(a, b, breaks, values).map_err(|err| e.err(err.to_string()))
}

/// `k` pieces on uniform cells; jump directions uniform on the sphere, sizes summing to `tv`.
pub fn random_steps(
    dim: usize,
    tv: f64,
    k: usize,
    seed: u64,
    a: f64,
    b: f64,
    offset: &State,
) -> Result<PiecewiseConstFn> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (1..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut u = offset.clone();
    let mut values = vec![u.clone()];
    for w in &weights {
        let mut d = State::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        while d.norm() < 1e-3 {
            d = State::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        }
        u += d.normalize() * (tv * w / total);
        values.push(u.clone());
    }
    let breaks = (1..k).map(|j| a + (b - a) * j as f64 / k as f64).collect();
    PiecewiseConstFn::new(a, b, breaks, values)
}

impl Scenario {
    /// `base` resolves relative paths in the document.
    pub fn from_doc(mut doc: KvDoc, base: &Path) -> Result<Self> {
        let sys_entry = doc.require("system")?;
        let system = resolve_system(&sys_entry.value, base).map_err(|err| match err {
            Error::UnknownSystem(name) => sys_entry.err(format!("unknown system `{name}`")),
            e => e,
        })?;
        let mode_entry = doc.require("mode")?;
        let task: Task = mode_entry.value.parse().map_err(|m: String| mode_entry.err(m))?;
        let length = doc.take("length").map(|e| positive(&e)).transpose()?.unwrap_or(1.0);
        let horizon = positive(&doc.require("horizon")?)?;
        let epsilon = doc.take("epsilon").map(|e| positive(&e)).transpose()?.unwrap_or(1e-3);
        let mesh = match doc.take("mesh") {
            None => 0.0,
            Some(e) => {
                let v: f64 = e.parse()?;
                if !(v >= 0.0) {
                    return Err(e.err("mesh must be >= 0"));
                }
                v
            }
        };
        let seed = doc.take_parsed::<u64>("seed")?.unwrap_or(0);

        let c = system.center().clone();
        let space = |dim| DataContext { dim, domain: (0.0, length), mesh, seed, base };
        let time = |dim| DataContext { dim, domain: (0.0, horizon), mesh, seed, base };
        let data = |doc: &mut KvDoc, key: &str, cx: DataContext, offset: &State| -> Result<Option<DataSpec>> {
            doc.take(key)
                .map(|e| Ok(DataSpec { value: parse_data(&e, &cx, offset)?, text: e.value.clone() }))
                .transpose()
        };
        let n = system.n();
        let initial = match data(&mut doc, "data.initial", space(n), &c)? {
            Some(d) => d,
            None => DataSpec { text: "center".into(), value: PiecewiseConstFn::constant(0.0, length, c.clone())? },
        };
        let target = data(&mut doc, "data.target", space(n), &c)?;
        let b1c = system.b1().eval(&c);
        let b2c = system.b2().eval(&c);
        let g1 = data(&mut doc, "data.g1", time(b1c.len()), &b1c)?;
        let g2 = data(&mut doc, "data.g2", time(b2c.len()), &b2c)?;
        let reduced_rows = match doc.take("control.reduced_rows") {
            None => 1,
            Some(e) => {
                let v: usize = e.parse()?;
                if v == 0 || v > b2c.len() {
                    return Err(e.err(format!("reduced_rows must lie in 1..={}", b2c.len())));
                }
                v
            }
        };
        let given_offset = match task {
            Task::Control(Mode::TwoSidedLess) => b2c.rows(0, reduced_rows).into_owned(),
            _ => b1c.clone(),
        };
        let given = data(&mut doc, "data.given", time(given_offset.len()), &given_offset)?;

        let mut tracker = TrackerConfig::new(epsilon);
        if let Some(v) = doc.take_parsed("tracker.gen_cap")? {
            tracker.gen_cap = v;
        }
        if let Some(e) = doc.take("tracker.rho_simp") {
            tracker.rho_simp = positive(&e)?;
        }
        if let Some(v) = doc.take_parsed("tracker.front_cap")? {
            tracker.front_cap = v;
        }
        if let Some(v) = doc.take_parsed("tracker.event_cap")? {
            tracker.event_cap = v;
        }
        if let Some(e) = doc.take("tracker.delta") {
            tracker.delta = Some(positive(&e)?);
        }
        if let Some(e) = doc.take("tracker.ball_margin") {
            let v = positive(&e)?;
            if v > 1.0 {
                return Err(e.err("ball_margin must lie in (0, 1]"));
            }
            tracker.ball_margin = v;
        }
        if let Some(e) = doc.take("tracker.lambda_hat") {
            tracker.lambda_hat = Some(positive(&e)?);
        }

        let force = doc.take("control.force").map(|e| bool_value(&e)).transpose()?.unwrap_or(false);
        let gap_steps = doc.take_parsed("control.gap_steps")?.unwrap_or(4);
        let interface = match doc.take("control.interface") {
            None => None,
            Some(e) => {
                let v = positive(&e)?;
                if v >= length {
                    return Err(e.err("interface must lie inside (0, L)"));
                }
                Some(v)
            }
        };
        let oracle = match doc.take("verify.oracle") {
            None => OracleChoice::Auto,
            Some(e) => e.value.parse().map_err(|_| e.err(format!("unknown oracle `{}`", e.value)))?,
        };
        let cells = doc.take_parsed("verify.cells")?.unwrap_or(4096);
        let cfl = match doc.take("verify.cfl") {
            None => 0.45,
            Some(e) => {
                let v = positive(&e)?;
                if v > 1.0 {
                    return Err(e.err("cfl must lie in (0, 1]"));
                }
                v
            }
        };
        let samples = doc.take_parsed("verify.samples")?.unwrap_or(10usize).max(1);
        let out_dir = doc.take("output.dir").map(|e| PathBuf::from(e.value)).unwrap_or_else(|| PathBuf::from("out"));
        let out_dir = match std::env::var_os("LDFRONT_OUT") {
            Some(dir) => PathBuf::from(dir),
            None => out_dir,
        };
        let svg = doc.take("output.svg").map(|e| bool_value(&e)).transpose()?.unwrap_or(false);
        doc.finish()?;

        Ok(Scenario {
            system_ref: sys_entry.value,
            system,
            task,
            length,
            horizon,
            epsilon,
            mesh,
            seed,
            initial,
            target,
            g1,
            g2,
            given,
            tracker,
            reduced_rows,
            force,
            gap_steps,
            interface,
            oracle,
            cells,
            cfl,
            samples,
            out_dir,
            svg,
        })
    }

    /// Resolved configuration in scenario syntax.
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("system", self.system_ref.clone());
        kv("mode", self.task.name());
        kv("length", self.length.to_string());
        kv("horizon", self.horizon.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("mesh", self.mesh.to_string());
        kv("seed", self.seed.to_string());
        kv("data.initial", self.initial.text.clone());
        for (k, d) in [("data.target", &self.target), ("data.g1", &self.g1), ("data.g2", &self.g2), ("data.given", &self.given)] {
            if let Some(d) = d {
                kv(k, d.text.clone());
            }
        }
        let t = &self.tracker;
        kv("tracker.gen_cap", t.gen_cap.to_string());
        kv("tracker.rho_simp", t.rho_simp.to_string());
        kv("tracker.front_cap", t.front_cap.to_string());
        kv("tracker.event_cap", t.event_cap.to_string());
        if let Some(d) = t.delta {
            kv("tracker.delta", d.to_string());
        }
        kv("tracker.ball_margin", t.ball_margin.to_string());
        if let Some(l) = t.lambda_hat {
            kv("tracker.lambda_hat", l.to_string());
        }
        if self.task == Task::Control(Mode::TwoSidedLess) {
            kv("control.reduced_rows", self.reduced_rows.to_string());
        }
        kv("control.force", self.force.to_string());
        kv("control.gap_steps", self.gap_steps.to_string());
        if let Some(x) = self.interface {
            kv("control.interface", x.to_string());
        }
        kv("verify.oracle", format!("{:?}", self.oracle).to_lowercase());
        kv("verify.cells", self.cells.to_string());
        kv("verify.cfl", self.cfl.to_string());
        kv("verify.samples", self.samples.to_string());
        kv("output.dir", self.out_dir.display().to_string());
        kv("output.svg", self.svg.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        Scenario::from_doc(KvDoc::parse(text)?, Path::new("."))
    }

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = parse("system = linear2\nmode = simulate\nhorizon = 1\n").unwrap();
        assert_eq!(s.task, Task::Simulate);
        assert_eq!(s.length, 1.0);
        assert_eq!(s.initial.value.cell_count(), 1);
        assert_eq!(s.tracker.epsilon, 1e-3);
    }

    #[test]
    fn step_data() {
        let s = parse("system = linear2\nmode = control:two_sided\nhorizon = 1.5\ndata.initial = 0 0 @0.5 0.04 0\n").unwrap();
        assert_eq!(s.initial.value.breaks(), &[0.5]);
        assert!((s.initial.value.tv() - 0.04).abs() < 1e-15);
        assert_eq!(s.task, Task::Control(Mode::TwoSided));
    }

    #[test]
    fn unknown_keys_and_bad_values_carry_positions() {
        let e = parse("system = linear2\nmode = simulate\nhorizon = 1\nfoo = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 4, .. }), "{e}");
        let e = parse("system = linear2\nmode = simulate\nhorizon = -1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, column: 11, .. }), "{e}");
        let e = parse("system = linear2\nmode = control:sideways\nhorizon = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = parse("system = burgers\nmode = simulate\nhorizon = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }), "{e}");
        let e = parse("system = linear2\nmode = simulate\nhorizon = 1\ndata.initial = 0 0 @0.5 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 4, .. }), "{e}");
    }

    #[test]
    fn random_data_is_seeded() {
        let a = random_steps(2, 0.05, 6, 3, 0.0, 1.0, &State::zeros(2)).unwrap();
        let b = random_steps(2, 0.05, 6, 3, 0.0, 1.0, &State::zeros(2)).unwrap();
        assert_eq!(a, b);
        assert!((a.tv() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn sampled_data_needs_mesh() {
        let e = parse("system = linear2\nmode = simulate\nhorizon = 1\ndata.initial = sin 0.01 0\n").unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
        let s = parse("system = linear2\nmode = simulate\nhorizon = 1\nmesh = 0.1\ndata.initial = sin 0.01 0\n").unwrap();
        // ten midpoints, the two central ones equal and merged
        assert_eq!(s.initial.value.cell_count(), 9);
    }

    #[test]
    fn resolved_config_parses_back() {
        let s = parse("system = linear2\nmode = verify\nhorizon = 1\ndata.g1 = 0 @0.5 0.01\n").unwrap();
        let again = parse(&s.resolved()).unwrap();
        assert_eq!(again.resolved(), s.resolved());
    }
}
