//! `ldfront`: batch front-end for front tracking and boundary control runs.

mod run;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldfront::config::KvDoc;
use ldfront::control::{min_control_time, Mode};
use ldfront::systems::{gallery, gallery_names};
use ldfront::Error;

use scenario::Scenario;

#[derive(Parser)]
#[command(name = "ldfront", version, about = "Front tracking and boundary control for linearly degenerate systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in systems.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
    /// Solve the initial-boundary value problem forward in time.
    Simulate(RunArgs),
    /// Synthesize boundary controls steering the initial state to the target.
    Control(RunArgs),
    /// Solve, then check residuals, clauses and a reference solution.
    Verify(RunArgs),
    /// List the scenario keys.
    Keys,
}

#[derive(Subcommand)]
enum GalleryAction {
    List,
    Show {
        name: String,
        /// Domain length used for the control thresholds.
        #[arg(long, default_value_t = 1.0)]
        length: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    /// Control mode: two_sided, one_sided or two_sided_less.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    mesh: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write diagram.svg.
    #[arg(long)]
    svg: bool,
    /// Run control below the threshold.
    #[arg(long)]
    force: bool,
    /// Any scenario key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

const EXIT_CHECK: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config { .. } | Error::UnknownSystem(_) | Error::InvalidArgument(_) | Error::Io(_) => EXIT_CONFIG,
        Error::TimeTooShort { .. } | Error::RankCondition(_) | Error::HypothesisViolated { .. } => EXIT_CHECK,
        _ => EXIT_NUMERIC,
    }
}

fn scenario(args: &RunArgs, task: &str) -> Result<Scenario, Error> {
    let (mut doc, base) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (KvDoc::parse(&text)?, base)
        }
        None => (KvDoc::default(), PathBuf::from(".")),
    };
    let mode = match (task, &args.mode) {
        ("control", Some(m)) => format!("control:{m}"),
        ("control", None) => match doc.peek("mode") {
            Some(e) if e.value.starts_with("control:") => e.value.clone(),
            _ => "control:two_sided".into(),
        },
        (t, _) => t.to_string(),
    };
    doc.set("mode", &mode);
    let nums = [("horizon", args.horizon), ("length", args.length), ("epsilon", args.epsilon), ("mesh", args.mesh)];
    for (k, v) in nums {
        if let Some(v) = v {
            doc.set(k, &v.to_string());
        }
    }
    if let Some(s) = &args.system {
        doc.set("system", s);
    }
    if let Some(s) = args.seed {
        doc.set("seed", &s.to_string());
    }
    if let Some(o) = &args.out {
        doc.set("output.dir", &o.display().to_string());
    }
    if args.svg {
        doc.set("output.svg", "true");
    }
    if args.force {
        doc.set("control.force", "true");
    }
    for kv in &args.set {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(Error::Config { line: 0, column: 0, message: format!("--set expects key=value, got `{kv}`") });
        };
        doc.set(k.trim(), v.trim());
    }
    Scenario::from_doc(doc, &base)
}

fn show(name: &str, length: f64) -> Result<(), Error> {
    let sys = gallery(name)?;
    let c = sys.center();
    let sd = sys.eigen(c)?;
    println!("name = {}", sys.name());
    println!("n = {}", sys.n());
    println!("m = {}", sys.m());
    let mult = sys.mult();
    println!("multiple_block = {}..{}", mult.k, mult.k + mult.p);
    println!("center = {}", join(c.iter()));
    println!("ball.radius = {}", sys.r_ball());
    println!("eigenvalues.center = {}", join(sd.lambdas.iter()));
    let st = sys.ball_stats();
    println!("eigenvalues.ball_min = {}", join(st.lambda_min.iter()));
    println!("eigenvalues.ball_max = {}", join(st.lambda_max.iter()));
    println!("entropy_pair = {}", sys.entropy().is_some());
    for mode in Mode::ALL {
        if let Ok(th) = min_control_time(&sys, mode, length) {
            println!("{th}");
        }
    }
    let rep = sys.validate(400)?;
    print!("{rep}");
    Ok(())
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" ")
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let (args, task) = match cli.command {
        Command::Gallery { action: GalleryAction::List } => {
            for name in gallery_names() {
                println!("{name}");
            }
            return Ok(true);
        }
        Command::Gallery { action: GalleryAction::Show { name, length } } => {
            show(&name, length)?;
            return Ok(true);
        }
        Command::Keys => {
            for (k, help) in scenario::KEYS {
                println!("{k:<22} {help}");
            }
            return Ok(true);
        }
        Command::Simulate(a) => (a, "simulate"),
        Command::Control(a) => (a, "control"),
        Command::Verify(a) => (a, "verify"),
    };
    let sc = scenario(&args, task)?;
    let passed = run::run(&sc)?;
    println!("{}", std::fs::read_to_string(sc.out_dir.join("report.txt"))?.trim_end());
    Ok(passed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
