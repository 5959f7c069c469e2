use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentConfig, ExperimentOutput};
use crate::error::{FppError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CSV_FILE: &str = "records.csv";
pub const JSONL_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

/// Written before any records so that interrupted runs are detectable.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub seed: u64,
    pub replications: usize,
    pub config_hash: String,
    pub replication_seed_rule: &'static str,
    pub model: String,
    pub distribution: String,
    pub distribution_note: Option<&'static str>,
    /// Thresholds that decide the exit status, echoed from the config.
    pub gate: Option<f64>,
    pub expect: Option<f64>,
    pub r2_min: f64,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let model = cfg.build_model()?;
        let dist = cfg.build_distribution()?;
        let e = &cfg.experiment;
        Ok(Manifest {
            tool: "fpp",
            version: env!("CARGO_PKG_VERSION"),
            experiment: e.kind.name(),
            seed: e.seed,
            replications: e.replications,
            config_hash: cfg.hash(),
            replication_seed_rule: "SipHash-1-3 keyed (seed, 0x7265706c69636174) over the replication index as u64 LE",
            model: model.describe(),
            distribution: dist.to_string(),
            distribution_note: dist.hypothesis_note(),
            gate: e.gate,
            expect: e.expect,
            r2_min: e.r2_min,
            config: cfg.clone(),
        })
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> FppError + '_ {
    move |e| FppError::io(path.display().to_string(), e)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| FppError::Config(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn write_manifest(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join(MANIFEST_FILE), &Manifest::new(cfg)?)
}

/// Writes `records.csv` (and `records.jsonl` if requested) and
/// `summary.json`.
pub fn write_results(dir: &Path, cfg: &ExperimentConfig, out: &ExperimentOutput) -> Result<()> {
    let csv_path = dir.join(CSV_FILE);
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| FppError::Config(format!("{}: {e}", csv_path.display())))?;
    let csv_err = |e: csv::Error| FppError::Config(format!("{}: {e}", csv_path.display()));
    w.write_record(&out.table.header).map_err(csv_err)?;
    for row in &out.table.rows {
        w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    if cfg.experiment.jsonl {
        let path = dir.join(JSONL_FILE);
        let mut text = String::new();
        for row in &out.table.rows {
            let obj: serde_json::Map<String, serde_json::Value> = out
                .table
                .header
                .iter()
                .zip(row)
                .map(|(h, c)| (h.to_string(), serde_json::to_value(c).unwrap_or(serde_json::Value::Null)))
                .collect();
            text.push_str(&serde_json::Value::Object(obj).to_string());
            text.push('\n');
        }
        fs::write(&path, text).map_err(io_err(&path))?;
    }

    let summary = serde_json::json!({
        "experiment": out.kind.name(),
        "gates_passed": out.gates_passed(),
        "gates": out.gates,
        "notes": out.notes,
        "summary": out.summary,
    });
    write_json(&dir.join(SUMMARY_FILE), &summary)
}

pub fn read_summary(dir: &Path) -> Result<serde_json::Value> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| FppError::Parse(format!("{}: {e}", path.display())))
}
