//! Command-line driver for grid scans, gap optimization, figure datasets and
//! exact-diagonalization checks of the two-cluster annealing models.

pub mod config;
pub mod figures;
pub mod output;
pub mod tasks;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use thiserror::Error;

use config::{ExperimentConfig, Task};
use output::{csv_bytes, ensure_absent, write_atomic};
use tasks::run_task;

pub const LAMBDA_MAPPING: &str = "lambda = -xi/2";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// What `run` was asked to do.
#[derive(Debug, Clone)]
pub enum Request {
    Task { task: Task, config: PathBuf, out: Option<PathBuf> },
    Figure { id: String, out: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub failed_points: usize,
}

struct Dataset {
    name: String,
    task: Task,
    config: ExperimentConfig,
    csv: PathBuf,
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs a request on the current rayon pool.
pub fn run(req: &Request) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let (label, datasets, summary_path) = match req {
        Request::Task { task, config, out } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let stem = match out {
                Some(dir) => dir.join(cfg.output.file_name().unwrap_or_else(|| "results".as_ref())),
                None => cfg.output.clone(),
            };
            let name = stem.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let d = Dataset { name, task: *task, config: cfg, csv: with_suffix(&stem, ".csv") };
            (task.name().to_string(), vec![d], with_suffix(&stem, ".json"))
        }
        Request::Figure { id, out } => {
            let dir = out.clone().unwrap_or_else(|| PathBuf::from("figures"));
            let panels = figures::panels(id)?;
            let d = panels
                .into_iter()
                .map(|p| Dataset { csv: dir.join(format!("{}.csv", p.name)), name: p.name, task: p.task, config: p.config })
                .collect();
            ("figure".to_string(), d, dir.join(format!("{id}.json")))
        }
    };
    let mut targets: Vec<PathBuf> = datasets.iter().map(|d| d.csv.clone()).collect();
    targets.push(summary_path.clone());
    ensure_absent(&targets)?;
    for t in &targets {
        ensure_absent(&[with_suffix(t, ".partial")])?;
    }

    let mut reports = Vec::new();
    let mut details = Map::new();
    let mut xi_star = None;
    let mut failed_points = 0;
    let mut intercluster = false;
    let mut outputs = Vec::new();
    for d in &datasets {
        log::info!("running {} ({})", d.name, d.task.name());
        let out = run_task(d.task, &d.config)?;
        failed_points += out.failed_points;
        intercluster |= d.config.is_intercluster_xi();
        for r in &out.reports {
            let mut v = serde_json::to_value(r).map_err(|e| CliError::Io(e.to_string()))?;
            v["dataset"] = json!(d.name);
            v["task"] = json!(d.task.name());
            reports.push(v);
        }
        if out.xi_star.is_some() {
            xi_star = out.xi_star;
        }
        if !out.details.is_null() {
            details.insert(d.name.clone(), out.details);
        }
        outputs.push((d.csv.clone(), csv_bytes(&out.rows)?));
    }

    let mut summary = json!({
        "task": label,
        "transition_reports": reports,
        "xi_star": xi_star,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "versions": {
            "meanfield-annealer": env!("CARGO_PKG_VERSION"),
            "meanfield-core": meanfield_core::VERSION,
        },
        "details": Value::Object(details),
        "failed_points": failed_points,
    });
    if let Request::Figure { id, .. } = req {
        summary["figure"] = json!(id);
    }
    if intercluster {
        summary["lambda_mapping"] = json!(LAMBDA_MAPPING);
    }
    let mut files = Vec::new();
    for (path, bytes) in outputs {
        write_atomic(&path, &bytes)?;
        files.push(path);
    }
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(&summary_path, text.as_bytes())?;
    files.push(summary_path);
    Ok(RunReport { files, failed_points })
}
