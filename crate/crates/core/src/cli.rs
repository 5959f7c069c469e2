//! The `fpp` command line: `validate`, `query`, `run` and `report`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 gate failure (or automaton
//! violations under `validate`), 3 config error, 4 resource/budget error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::combing::{analyze, builtin_automaton, cone_measure, sphere_count, verify_geodesic_language, AnalysisOptions};
use crate::environment::Environment;
use crate::error::{FppError, Result};
use crate::experiments::{
    read_summary, run_experiment, write_manifest, write_results, ExperimentConfig, SetupConfig,
};
use crate::geometry::gromov_product;
use crate::group::GroupModel;
use crate::metric::{restricted_passage_time, DEFAULT_RELAXATION_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_GATE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// Exit code for an error.
pub fn exit_code(e: &FppError) -> i32 {
    match e {
        FppError::Config(_) | FppError::Format { .. } | FppError::Parse(_) | FppError::Io { .. } | FppError::UnknownLabel(_) => {
            EXIT_CONFIG
        }
        FppError::Resource { .. } => EXIT_RESOURCE,
        _ => EXIT_RUNTIME,
    }
}

#[derive(Debug, Parser)]
#[command(name = "fpp", version, about = "First-passage percolation on Cayley graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the geodesic automaton against BFS and print its spectral data.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ball radius for the automaton check.
        #[arg(long, default_value_t = 5)]
        radius: u64,
        /// Directory to save `validate.json` in.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One computation, printed as JSON.
    Query {
        #[arg(value_enum)]
        kind: QueryKind,
        args: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cylinder radius for passage queries.
        #[arg(long, default_value_t = 2)]
        b: u64,
        #[arg(long, default_value_t = DEFAULT_RELAXATION_BUDGET)]
        budget_relaxations: u64,
    },
    /// Run the experiment named in the config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        budget_relaxations: Option<u64>,
    },
    /// Print the gates of a finished run.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum QueryKind {
    /// `passage x y`: ω-passage time inside the cylinder around `[x, y]`.
    Passage,
    /// `cone g`: boundary measure of the cone of `g`.
    Cone,
    /// `gromov x y o`.
    Gromov,
    /// `distance x y`: word distance.
    Distance,
    /// `geodesic x y`: the canonical word geodesic.
    Geodesic,
    /// `sphere n`: sphere size counted by the automaton.
    Sphere,
    /// Growth rate and period of the automaton.
    Lambda,
}

/// Runs the command line with the given arguments (including the program
/// name), writing results to `out` and diagnostics to standard error.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fpp: {e}");
            exit_code(&e)
        }
    }
}

fn print_json(out: &mut dyn Write, v: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| FppError::Config(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| FppError::io("<stdout>", e))
}

fn setup(config: Option<&Path>) -> Result<SetupConfig> {
    match config {
        Some(p) => SetupConfig::load(p),
        None => Ok(SetupConfig::default()),
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Validate { config, radius, out: dir } => validate(config.as_deref(), radius, dir.as_deref(), out),
        Command::Query { kind, args, config, seed, b, budget_relaxations } => {
            let cfg = setup(config.as_deref())?;
            let model = cfg.model.build()?;
            let v = query(&model, &cfg, kind, &args, seed, b, budget_relaxations)?;
            print_json(out, &v)?;
            Ok(EXIT_OK)
        }
        Command::Run { config, seed, out: dir, workers, budget_relaxations } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            let e = &mut cfg.experiment;
            if let Some(s) = seed {
                e.seed = s;
            }
            if let Some(w) = workers {
                e.workers = w;
            }
            if let Some(b) = budget_relaxations {
                e.budget_relaxations = b;
            }
            let dir = dir.or_else(|| e.output.clone()).unwrap_or_else(|| PathBuf::from("fpp-out"));
            // output location and worker count do not affect results
            cfg.experiment.output = None;
            cfg.experiment.workers = 0;
            let workers = workers.unwrap_or(0);
            let mut run_cfg = cfg.clone();
            run_cfg.experiment.workers = workers;
            write_manifest(&dir, &cfg)?;
            let result = run_experiment(&run_cfg)?;
            write_results(&dir, &cfg, &result)?;
            for g in &result.gates {
                writeln!(out, "{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail)
                    .map_err(|e| FppError::io("<stdout>", e))?;
            }
            for n in &result.notes {
                writeln!(out, "note: {n}").map_err(|e| FppError::io("<stdout>", e))?;
            }
            Ok(if result.gates_passed() { EXIT_OK } else { EXIT_GATE })
        }
        Command::Report { out: dir } => {
            let summary = read_summary(&dir)?;
            print_json(out, &summary)?;
            let passed = summary["gates_passed"].as_bool().unwrap_or(false);
            Ok(if passed { EXIT_OK } else { EXIT_GATE })
        }
    }
}

fn validate(config: Option<&Path>, radius: u64, dir: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let cfg = setup(config)?;
    let model = cfg.model.build()?;
    let aut = builtin_automaton(&model)?;
    let report = verify_geodesic_language(&aut, &model, radius)?;
    let analysis = analyze(&aut, &AnalysisOptions::default())?;
    let v = json!({
        "model": model.describe(),
        "states": aut.n_states(),
        "verification": report,
        "lambda": analysis.lambda(),
        "period": analysis.spectral.period,
        "components": analysis.components,
    });
    print_json(out, &v)?;
    if let Some(d) = dir {
        std::fs::create_dir_all(d).map_err(|e| FppError::io(d.display().to_string(), e))?;
        let path = d.join("validate.json");
        let text = serde_json::to_string_pretty(&v).map_err(|e| FppError::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| FppError::io(path.display().to_string(), e))?;
    }
    Ok(if report.is_ok() { EXIT_OK } else { EXIT_GATE })
}

fn expect_args<'a>(args: &'a [String], n: usize, usage: &str) -> Result<&'a [String]> {
    if args.len() != n {
        return Err(FppError::Parse(format!("usage: query {usage}")));
    }
    Ok(args)
}

fn query(
    model: &GroupModel,
    cfg: &SetupConfig,
    kind: QueryKind,
    args: &[String],
    seed: u64,
    b: u64,
    budget: u64,
) -> Result<serde_json::Value> {
    let el = |s: &str| model.parse_element(s);
    Ok(match kind {
        QueryKind::Passage => {
            let a = expect_args(args, 2, "passage X Y")?;
            let env = Environment::new(seed, cfg.distribution.build()?);
            let res = restricted_passage_time(model, &env, &el(&a[0])?, &el(&a[1])?, b, budget)?;
            let path: Vec<String> = res.path.iter().map(|v| model.format_element(v)).collect();
            json!({
                "time": res.time,
                "path_edges": res.n_edges(),
                "path": path,
                "near_tie": res.near_tie,
                "relaxations": res.relaxations,
            })
        }
        QueryKind::Cone => {
            let a = expect_args(args, 1, "cone G")?;
            let analysis = analyze(&builtin_automaton(model)?, &AnalysisOptions::default())?;
            json!({ "cone": cone_measure(&analysis, model, &el(&a[0])?)? })
        }
        QueryKind::Gromov => {
            let a = expect_args(args, 3, "gromov X Y O")?;
            json!({ "gromov": gromov_product(model, &el(&a[0])?, &el(&a[1])?, &el(&a[2])?)? })
        }
        QueryKind::Distance => {
            let a = expect_args(args, 2, "distance X Y")?;
            json!({ "distance": model.distance(&el(&a[0])?, &el(&a[1])?)? })
        }
        QueryKind::Geodesic => {
            let a = expect_args(args, 2, "geodesic X Y")?;
            let path: Vec<String> = model
                .word_geodesic(&el(&a[0])?, &el(&a[1])?)?
                .iter()
                .map(|v| model.format_element(v))
                .collect();
            json!({ "geodesic": path })
        }
        QueryKind::Sphere => {
            let a = expect_args(args, 1, "sphere N")?;
            let n: u64 = a[0].parse().map_err(|_| FppError::Parse(format!("bad sphere radius {:?}", a[0])))?;
            json!({ "n": n, "count": sphere_count(&builtin_automaton(model)?, n).to_string() })
        }
        QueryKind::Lambda => {
            expect_args(args, 0, "lambda")?;
            let analysis = analyze(&builtin_automaton(model)?, &AnalysisOptions::default())?;
            json!({ "lambda": analysis.lambda(), "period": analysis.spectral.period })
        }
    })
}
