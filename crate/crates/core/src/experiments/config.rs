use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::combing::DirectionSpec;
use crate::environment::{DistributionDescriptor, WeightDistribution};
use crate::error::{FppError, Result};
use crate::group::{GroupModel, ModelDescriptor};
use crate::metric::DEFAULT_RELAXATION_BUDGET;

/// Which experiment a config runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Velocity,
    BVelocity,
    CoarseGrain,
    Frequency,
    Direction,
    Coalescence,
    Variance,
    Counterexample,
    Concentration,
    Clt,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Velocity => "velocity",
            ExperimentKind::BVelocity => "b-velocity",
            ExperimentKind::CoarseGrain => "coarse-grain",
            ExperimentKind::Frequency => "frequency",
            ExperimentKind::Direction => "direction",
            ExperimentKind::Coalescence => "coalescence",
            ExperimentKind::Variance => "variance",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::Clt => "clt",
        }
    }
}

/// The `[experiment]` table. Fields not used by the chosen kind are ignored.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub n: Vec<usize>,
    /// Cylinder radius for passage times.
    #[serde(default = "default_b")]
    pub b: u64,
    #[serde(default)]
    pub b_grid: Vec<u64>,
    /// Reference cylinder radius for `T_B` comparisons; when absent the
    /// largest radius whose cylinder fits in `max_domain_vertices` is used.
    #[serde(default)]
    pub b_ref: Option<u64>,
    #[serde(default = "default_max_domain_vertices")]
    pub max_domain_vertices: usize,
    #[serde(default)]
    pub directions: Vec<DirectionSpec>,
    #[serde(default)]
    pub basepoints: Vec<String>,
    #[serde(default)]
    pub words: Vec<String>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Scale (block length) for coarse-grained velocities and frequencies.
    #[serde(default)]
    pub scale: Option<usize>,
    /// Number of segments or sampled-ray length, depending on the kind.
    #[serde(default)]
    pub length: Option<usize>,
    /// Block length D for coalescence intersection counts.
    #[serde(default)]
    pub block: Option<usize>,
    /// Neighbourhood size C for the midpoint test.
    #[serde(default)]
    pub c: Option<u64>,
    /// Geodesic-length ratio threshold for concentration tails.
    #[serde(default)]
    pub ratio_threshold: Option<f64>,
    #[serde(default)]
    pub alternation_levels: Option<usize>,
    /// Pass/fail threshold for the experiment's main gate, if any.
    #[serde(default)]
    pub gate: Option<f64>,
    /// Expected value for an oracle gate (e.g. a known velocity).
    #[serde(default)]
    pub expect: Option<f64>,
    #[serde(default = "default_r2_min")]
    pub r2_min: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_budget")]
    pub budget_relaxations: u64,
    #[serde(default)]
    pub jsonl: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_replications() -> usize {
    100
}
fn default_b() -> u64 {
    2
}
fn default_max_domain_vertices() -> usize {
    200_000
}
fn default_r2_min() -> f64 {
    0.98
}
fn default_bootstrap() -> usize {
    200
}
fn default_budget() -> u64 {
    DEFAULT_RELAXATION_BUDGET
}

/// A full experiment configuration file.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_model")]
    pub model: ModelDescriptor,
    #[serde(default = "default_distribution")]
    pub distribution: DistributionDescriptor,
    pub experiment: ExperimentSection,
}

fn default_model() -> ModelDescriptor {
    ModelDescriptor {
        kind: "free".into(),
        rank: Some(2),
        ..Default::default()
    }
}

fn default_distribution() -> DistributionDescriptor {
    DistributionDescriptor {
        kind: "uniform".into(),
        a: Some(0.0),
        b: Some(1.0),
        ..Default::default()
    }
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| FppError::io(p.display().to_string(), e))
}

// automaton paths are relative to the config file
fn resolve_automaton(model: &mut ModelDescriptor, config_path: &Path) {
    if let (Some(aut), Some(dir)) = (&model.automaton, config_path.parent()) {
        if Path::new(aut).is_relative() {
            model.automaton = Some(dir.join(aut).display().to_string());
        }
    }
}

/// The model and weight law of a config file, for commands that do not run
/// an experiment. The `[experiment]` table may be present but is not read.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupConfig {
    #[serde(default = "default_model")]
    pub model: ModelDescriptor,
    #[serde(default = "default_distribution")]
    pub distribution: DistributionDescriptor,
    #[serde(default)]
    pub experiment: Option<toml::Value>,
}

impl Default for SetupConfig {
    fn default() -> Self {
        SetupConfig {
            model: default_model(),
            distribution: default_distribution(),
            experiment: None,
        }
    }
}

impl SetupConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FppError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p = path.as_ref();
        let mut cfg = Self::parse(&read(p)?)?;
        resolve_automaton(&mut cfg.model, p);
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| FppError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p = path.as_ref();
        let mut cfg = Self::parse(&read(p)?)?;
        resolve_automaton(&mut cfg.model, p);
        Ok(cfg)
    }

    /// Structural checks that do not need the model.
    pub fn check(&self) -> Result<()> {
        let e = &self.experiment;
        if e.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FppError::Config("experiment.n must be strictly increasing".into()));
        }
        if e.b_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FppError::Config("experiment.b_grid must be strictly increasing".into()));
        }
        if e.replications == 0 {
            return Err(FppError::Config("experiment.replications must be positive".into()));
        }
        if matches!(e.kind, ExperimentKind::Variance) && e.replications < 2 {
            return Err(FppError::Config("variance estimates need replications ≥ 2".into()));
        }
        self.distribution.build()?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<GroupModel> {
        self.model.build()
    }

    pub fn build_distribution(&self) -> Result<WeightDistribution> {
        self.distribution.build()
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(
            r#"
            [model]
            kind = "free"
            rank = 2
            [distribution]
            kind = "uniform"
            a = 0.0
            b = 1.0
            [experiment]
            kind = "velocity"
            n = [10, 20]
            directions = ["pole:ab", "sampled:3"]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.experiment.kind, ExperimentKind::Velocity);
        assert_eq!(cfg.experiment.directions[1], DirectionSpec::Sampled(3));
        assert_eq!(cfg.experiment.replications, 100);
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = |exp: &str| format!("[experiment]\n{exp}\n");
        assert!(ExperimentConfig::parse(&base("kind = \"velocity\"\nn = [20, 10]")).is_err());
        assert!(ExperimentConfig::parse(&base("kind = \"warp\"")).is_err());
        assert!(ExperimentConfig::parse(&base("kind = \"velocity\"\nbogus = 1")).is_err());
        assert!(ExperimentConfig::parse(&base("kind = \"variance\"\nreplications = 1")).is_err());
        let atoms = "[distribution]\nkind = \"bernoulli\"\n[experiment]\nkind = \"velocity\"\n";
        assert!(matches!(ExperimentConfig::parse(atoms), Err(FppError::Config(_))));
    }
}
