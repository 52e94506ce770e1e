//! Output directories, staging and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::simulate::RunOutput;

/// Environment variable overriding the configured output directory.
pub const OUT_DIR_ENV: &str = "FEWBOSON_OUT";

pub const MANIFEST: &str = "manifest.toml";
pub const CHECKPOINT: &str = "trajectory.bin";

/// `--out` wins over the environment, which wins over the configuration.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &RunConfig, fallback: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.outputs
        .directory
        .clone()
        .unwrap_or_else(|| Path::new("fewboson-out").join(fallback))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub program: String,
    pub version: String,
    pub command: String,
    pub status: String,
    pub wall_seconds: f64,
    pub workers: usize,
    pub files: Vec<String>,
    pub notes: Vec<String>,
    pub summary: BTreeMap<String, f64>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig, workers: usize) -> Self {
        Self {
            program: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            status: "ok".into(),
            wall_seconds: 0.0,
            workers,
            files: Vec::new(),
            notes: Vec::new(),
            summary: BTreeMap::new(),
            config: cfg.clone(),
        }
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("manifest: {e}")))?;
        fs::write(dir.join(MANIFEST), text)?;
        Ok(())
    }
}

/// Writes every series of `out` as `<stem>.tsv` into `dir`; returns the
/// file names.
pub fn write_series(dir: &Path, out: &RunOutput) -> Result<Vec<String>, CliError> {
    let mut files = Vec::new();
    for (stem, series) in &out.series {
        let name = format!("{stem}.tsv");
        series.save(&dir.join(&name))?;
        files.push(name);
    }
    Ok(files)
}

/// Runs `body` against a fresh staging directory next to `dir` and moves
/// its files into `dir` only when it succeeds. On failure the staging
/// directory is removed, so a failed run leaves nothing behind.
pub fn staged<T, F>(dir: &Path, body: F) -> Result<T, CliError>
where
    F: FnOnce(&Path) -> Result<T, CliError>,
{
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let parent = dir
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(parent)?;
    let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    let result = body(&staging).and_then(|v| {
        fs::create_dir_all(dir)?;
        for entry in fs::read_dir(&staging)? {
            let entry = entry?;
            let target = dir.join(entry.file_name());
            if target.is_dir() {
                fs::remove_dir_all(&target)?;
            }
            fs::rename(entry.path(), target)?;
        }
        Ok(v)
    });
    let _ = fs::remove_dir_all(&staging);
    result
}
