//! Parameter scans: one sub-run per axis value, run concurrently up to the
//! worker limit, then aggregated through the analysis module.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fewboson::Exec;

use crate::analyze::{analyze_scan, write_scan_analysis, ScanAnalysis};
use crate::config::{RunConfig, ScanAxis};
use crate::error::CliError;
use crate::output::{staged, write_series, Manifest, CHECKPOINT};
use crate::simulate::{simulate, RunOutput};

pub const SCAN_MANIFEST: &str = "scan.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubRun {
    pub value: f64,
    pub directory: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanManifest {
    pub program: String,
    pub version: String,
    pub axis: String,
    pub workers: usize,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<String>,
    pub runs: Vec<SubRun>,
    pub config: RunConfig,
}

impl ScanManifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(SCAN_MANIFEST);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sub_dir_name(axis: ScanAxis, value: f64) -> String {
    format!("{}-{value}", axis.name())
}

/// Runs one configuration into `dir` with staging, writing the series,
/// the optional checkpoint and the manifest.
pub fn run_into(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    exec: Exec,
    workers: usize,
) -> Result<(RunOutput, Manifest), CliError> {
    let start = Instant::now();
    staged(dir, |stage| {
        let ckpt = cfg.outputs.checkpoint.then(|| stage.join(CHECKPOINT));
        let out = simulate(cfg, exec, ckpt.as_deref())?;
        let mut manifest = Manifest::new(command, cfg, workers);
        manifest.files = write_series(stage, &out)?;
        if ckpt.is_some() {
            manifest.files.push(CHECKPOINT.into());
        }
        manifest.summary = out.summary.clone();
        manifest.notes = out.notes.clone();
        manifest.wall_seconds = start.elapsed().as_secs_f64();
        manifest.save(stage)?;
        Ok((out, manifest))
    })
}

/// Outcome of a scan.
#[derive(Debug)]
pub struct ScanResult {
    pub manifest: ScanManifest,
    pub analysis: Option<ScanAnalysis>,
}

pub fn run_scan(dir: &Path, cfg: &RunConfig, workers: usize) -> Result<ScanResult, CliError> {
    cfg.validate()?;
    let scan = cfg
        .scan
        .clone()
        .ok_or_else(|| CliError::Usage("configuration has no [scan] section".into()))?;
    let start = Instant::now();
    let workers = if cfg.engine.deterministic { 1 } else { workers.max(1) };
    // sub-runs parallelize across values, so each one runs sequentially
    let exec = if workers > 1 || cfg.engine.deterministic {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    fs::create_dir_all(dir)?;
    let jobs: Vec<(f64, PathBuf, RunConfig)> = scan
        .values
        .iter()
        .map(|&v| (v, dir.join(sub_dir_name(scan.axis, v)), cfg.with_axis(scan.axis, v)))
        .collect();
    let run_one = |(v, sub, c): &(f64, PathBuf, RunConfig)| {
        let t0 = Instant::now();
        let r = run_into(sub, "scan", c, exec, 1);
        (*v, sub.clone(), r, t0.elapsed().as_secs_f64())
    };
    let results: Vec<_> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_one).collect())
    } else {
        jobs.iter().map(run_one).collect()
    };

    let mut runs = Vec::new();
    let mut analyzable = Vec::new();
    for (v, sub, r, wall) in results {
        let name = sub
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let (status, message) = match r {
            Ok((out, _)) => {
                if let Some(s) = out.series.get(&cfg.analysis.series) {
                    analyzable.push((v, s.clone()));
                }
                ("ok".to_string(), None)
            }
            Err(e @ CliError::Refused(_)) => ("refused".to_string(), Some(e.to_string())),
            Err(e) => ("failed".to_string(), Some(e.to_string())),
        };
        runs.push(SubRun {
            value: v,
            directory: name,
            status,
            message,
            wall_seconds: wall,
        });
    }
    let mut analysis_note = None;
    let analysis = if analyzable.is_empty() {
        None
    } else {
        match analyze_scan(scan.axis.name(), &analyzable, &cfg.analysis) {
            Ok(sa) => {
                write_scan_analysis(dir, scan.axis.name(), &sa, &cfg.analysis)?;
                Some(sa)
            }
            Err(e) => {
                analysis_note = Some(format!("analysis failed: {e}"));
                None
            }
        }
    };
    let manifest = ScanManifest {
        program: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        axis: scan.axis.name().into(),
        workers,
        wall_seconds: start.elapsed().as_secs_f64(),
        analysis: analysis_note,
        runs,
        config: cfg.clone(),
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| CliError::Config(format!("scan manifest: {e}")))?;
    fs::write(dir.join(SCAN_MANIFEST), text)?;
    Ok(ScanResult { manifest, analysis })
}
