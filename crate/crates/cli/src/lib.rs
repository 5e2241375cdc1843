//! Scene-driven front end: parses scenes, dispatches module pipelines and
//! writes JSON reports and CSV plot data.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on input errors.

pub mod commands;
pub mod plot;
pub mod report;
pub mod scene;
pub mod suite;
pub mod tolerances;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::{parse_xi, Outcome, RunOptions};
use crate::plot::PlotKind;
use crate::report::Report;
use crate::scene::{parse_scene, Scene, SceneError, SceneResult};
use crate::tolerances::Tolerances;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Scene used by `suite` when no scene file is given.
pub const ACCEPTANCE_SCENE: &str = "{\n  \"seed\": 20261014\n}\n";

#[derive(Debug, Parser)]
#[command(name = "contact-forge", version, about = "Holomorphic Legendrian curves and contact normal forms on jets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scene file (JSON).
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    /// JSON report path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// CSV path for the plot series.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Plot series written to --csv (default depends on the command).
    #[arg(long, global = true, value_enum)]
    pub plot: Option<PlotKind>,
    /// RK4 steps of the Moser flow.
    #[arg(long = "t-steps", global = true)]
    pub t_steps: Option<usize>,
    /// Spray control bound.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Fiber truncation degree of the scene jets.
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Overrides the scene seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance override NAME=VALUE, repeatable.
    #[arg(long, global = true)]
    pub tol: Vec<String>,
    /// Output records (legendrianize).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Spray parameter `re,im;re,im;re,im`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub xi: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Contact certificate and Reeb field of the scene form.
    Check,
    /// Corrects z so every legendrian_map object becomes Legendrian.
    Legendrianize,
    /// Darboux normalization of the scene form; frame completion of function_matrix objects.
    Normalize,
    /// Moser flow for every moser_problem object.
    Moser,
    /// Builds and certifies the scene spray.
    Spray,
    /// Isotropy, dimension formula and normal splitting.
    Symplectic,
    /// The acceptance matrix.
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Legendrianize => "legendrianize",
            Command::Normalize => "normalize",
            Command::Moser => "moser",
            Command::Spray => "spray",
            Command::Symplectic => "symplectic",
            Command::Suite => "suite",
        }
    }

    fn default_plot(self) -> Option<PlotKind> {
        match self {
            Command::Check | Command::Legendrianize => Some(PlotKind::LengthProfile),
            Command::Moser => Some(PlotKind::ResidualDecay),
            Command::Spray => Some(PlotKind::CurveTrace),
            _ => None,
        }
    }
}

/// Thread count from `CONTACT_FORGE_THREADS`, default all cores.
pub fn thread_pool() -> SceneResult<rayon::ThreadPool> {
    let threads = match std::env::var("CONTACT_FORGE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| SceneError(format!("CONTACT_FORGE_THREADS must be a positive integer, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SceneError(e.to_string()))
}

fn read(path: &Path) -> SceneResult<String> {
    std::fs::read_to_string(path).map_err(|e| SceneError(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> SceneResult<()> {
    std::fs::write(path, text).map_err(|e| SceneError(format!("cannot write {}: {e}", path.display())))
}

/// Runs a parsed command line; returns the report (when one was produced)
/// and the exit code. Diagnostics go to stderr.
pub fn run(cli: &Cli) -> (Option<Report>, i32) {
    match execute(cli) {
        Ok((report, code)) => (Some(report), code),
        Err(e) => {
            eprintln!("error: {e}");
            (None, EXIT_INPUT)
        }
    }
}

fn execute(cli: &Cli) -> SceneResult<(Report, i32)> {
    let text = match (&cli.scene, cli.command) {
        (Some(p), _) => read(p)?,
        (None, Command::Suite) => ACCEPTANCE_SCENE.to_string(),
        (None, _) => return Err(SceneError("--scene is required".into())),
    };
    let mut scene: Scene = parse_scene(&text)?;
    if let Some(d) = cli.degree {
        scene.degree = d;
    }
    if let Some(s) = cli.seed {
        scene.seed = s;
    }
    scene.validate()?;
    let mut tol = Tolerances::default();
    for (k, v) in &scene.tolerances {
        tol.set(k, *v)?;
    }
    for t in &cli.tol {
        tol.apply_flag(t)?;
    }
    let opts = RunOptions {
        t_steps: cli.t_steps,
        mu: cli.mu,
        xi: cli.xi.as_deref().map(parse_xi).transpose()?,
        plot: cli.plot.or(cli.command.default_plot()),
    };
    let pool = thread_pool()?;
    let report = Report::new(cli.command.name(), text.as_bytes(), scene.seed);
    let outcome = pool.install(|| -> SceneResult<Outcome> {
        match cli.command {
            Command::Check => commands::check(&scene, &tol, report),
            Command::Legendrianize => commands::legendrianize_cmd(&scene, &tol, report),
            Command::Normalize => commands::normalize_cmd(&scene, &tol, report),
            Command::Moser => commands::moser_cmd(&scene, &tol, &opts, report),
            Command::Spray => commands::spray_cmd(&scene, &tol, &opts, report),
            Command::Symplectic => commands::symplectic_cmd(&scene, &tol, report),
            Command::Suite => Ok(Outcome {
                report: suite::run_suite(scene.seed, text.as_bytes(), &pool),
                tables: Vec::new(),
                records: None,
            }),
        }
    })?;
    let mut code = if outcome.report.all_pass { EXIT_PASS } else { EXIT_FAIL };
    if let Some(path) = &cli.report {
        write(path, &outcome.report.to_json())?;
    }
    if let Some(path) = &cli.out {
        match &outcome.records {
            Some(r) => write(path, &format!("{}\n", serde_json::to_string_pretty(r).expect("records serialize")))?,
            None => return Err(SceneError(format!("{} produces no --out records", cli.command.name()))),
        }
    }
    if let Some(path) = &cli.csv {
        let kind = opts.plot;
        match kind.and_then(|k| outcome.tables.iter().find(|t| t.kind == k)) {
            Some(t) => write(path, &t.to_csv())?,
            None => {
                eprintln!(
                    "missing plot series `{}` for {}",
                    kind.map_or("none", PlotKind::name),
                    cli.command.name()
                );
                code = EXIT_FAIL;
            }
        }
    }
    if code == EXIT_FAIL && !outcome.report.all_pass {
        eprintln!("failing checks: {}", outcome.report.failing().join(", "));
    }
    Ok((outcome.report, code))
}
