//! Monte Carlo experiment drivers.
//!
//! Every driver is a deterministic function of the config: replication `r`
//! uses the environment seeded by [`replication_seed`]`(seed, r)`, all
//! quantities within a replication share that environment (common random
//! numbers across `n`, `B` and basepoints), and records are assembled in
//! replication order regardless of the worker count.

mod coalescence;
mod config;
mod counterexample;
mod frequency;
mod output;
pub mod stats;
mod variance;
mod velocity;

use std::fmt;
use std::hash::Hasher;

use rayon::prelude::*;
use serde::Serialize;
use siphasher::sip::SipHasher13;

pub use config::{ExperimentConfig, ExperimentKind, ExperimentSection, SetupConfig};
pub use output::{read_summary, write_manifest, write_results, Manifest, CSV_FILE, JSONL_FILE, MANIFEST_FILE, SUMMARY_FILE};

use crate::combing::{DirectionSpec, Ray};
use crate::environment::{Environment, WeightDistribution};
use crate::error::{FppError, Result};
use crate::group::{Element, GroupModel};
use crate::metric::{CompiledDomain, Domain};

/// Seed of replication `r` under master seed `seed`.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    let mut h = SipHasher13::new_with_keys(seed, 0x7265_706c_6963_6174);
    h.write_u64(r as u64);
    h.finish()
}

/// One CSV cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Text(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Per-replication records with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }
}

/// Outcome of one pass/fail check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Gate {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub table: Table,
    pub summary: serde_json::Value,
    pub gates: Vec<Gate>,
    pub notes: Vec<String>,
}

impl ExperimentOutput {
    pub fn gates_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }
}

/// Shared state for one experiment run.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub model: GroupModel,
    pub dist: WeightDistribution,
    pool: rayon::ThreadPool,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.experiment.workers)
            .build()
            .map_err(|e| FppError::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Context {
            cfg,
            model: cfg.build_model()?,
            dist: cfg.build_distribution()?,
            pool,
        })
    }

    pub fn seed(&self) -> u64 {
        self.cfg.experiment.seed
    }

    pub fn budget(&self) -> u64 {
        self.cfg.experiment.budget_relaxations
    }

    pub fn env(&self, r: usize) -> Environment {
        Environment::new(replication_seed(self.seed(), r), self.dist)
    }

    /// Runs `f(r, env_r)` for every replication on the worker pool and
    /// returns the results in replication order.
    pub fn replicate<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &Environment) -> Result<T> + Sync + Send,
    {
        let reps = self.cfg.experiment.replications;
        self.pool
            .install(|| (0..reps).into_par_iter().map(|r| f(r, &self.env(r))).collect())
    }

    pub fn n_grid(&self) -> Result<Vec<usize>> {
        let n = &self.cfg.experiment.n;
        if n.is_empty() {
            return Err(FppError::Config("experiment.n must list at least one horizon".into()));
        }
        Ok(n.clone())
    }

    pub fn directions(&self) -> Vec<DirectionSpec> {
        if self.cfg.experiment.directions.is_empty() {
            let first = if self.model.is_cyclic() { "1" } else { "a" };
            vec![DirectionSpec::Pole(first.into())]
        } else {
            self.cfg.experiment.directions.clone()
        }
    }

    pub fn realize(&self, d: &DirectionSpec, n: usize) -> Result<Ray> {
        d.realize(&self.model, n)
    }

    /// `N_B(path)` compiled, refusing domains above the configured size.
    pub fn cylinder(&self, path: &[Element], b: u64) -> Result<CompiledDomain> {
        let dom = CompiledDomain::compile(&self.model, &Domain::cylinder(b, path.to_vec()))?;
        let cap = self.cfg.experiment.max_domain_vertices;
        if dom.len() > cap {
            return Err(FppError::resource(format!("cylinder of radius {b} ({} vertices)", dom.len()), cap as u64));
        }
        Ok(dom)
    }
}

/// Runs the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ctx = Context::new(cfg)?;
    let mut out = match cfg.experiment.kind {
        ExperimentKind::Velocity => velocity::velocity(&ctx)?,
        ExperimentKind::BVelocity => velocity::b_velocity(&ctx)?,
        ExperimentKind::CoarseGrain => velocity::coarse_grain(&ctx)?,
        ExperimentKind::Frequency => frequency::frequency(&ctx)?,
        ExperimentKind::Direction => coalescence::direction(&ctx)?,
        ExperimentKind::Coalescence => coalescence::coalescence(&ctx)?,
        ExperimentKind::Variance => variance::variance(&ctx)?,
        ExperimentKind::Counterexample => counterexample::counterexample(&ctx)?,
        ExperimentKind::Concentration => variance::concentration(&ctx)?,
        ExperimentKind::Clt => variance::clt(&ctx)?,
    };
    if let Some(note) = ctx.dist.hypothesis_note() {
        out.notes.push(format!("{}: {note}", ctx.dist));
    }
    Ok(out)
}

/// `Var(ρ)` and `E ρ` as JSON, for summaries.
pub(crate) fn distribution_json(d: &WeightDistribution) -> serde_json::Value {
    serde_json::json!({
        "law": d.to_string(),
        "mean": d.mean(),
        "variance": d.variance(),
        "sub_gaussian": d.is_sub_gaussian(),
    })
}
