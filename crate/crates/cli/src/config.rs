//! Run configuration: TOML sections `system`, `schedule`, `engine`,
//! `outputs`, plus optional `scan` and `analysis`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub particles: usize,
    pub wells: usize,
    pub depth: f64,
    pub orbitals: usize,
    /// Interior DVR points; defaults to 30 per well.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default = "default_kinetic")]
    pub kinetic_prefactor: f64,
    /// Bands used for Wannier projections; defaults to every complete band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<usize>,
}

fn default_kinetic() -> f64 {
    fewboson::lattice::DEFAULT_KINETIC
}

impl SystemConfig {
    pub fn grid_points(&self) -> usize {
        self.grid_points
            .unwrap_or(fewboson::lattice::POINTS_PER_WELL * self.wells)
    }

    pub fn bands(&self) -> usize {
        self.bands.unwrap_or(self.orbitals / self.wells.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub g_in: f64,
    pub g_f: f64,
    pub tau: f64,
    pub pulses: usize,
    /// Defaults to `2 n_p tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
}

fn default_sample_dt() -> f64 {
    0.1
}

impl ScheduleConfig {
    pub fn t_end(&self) -> f64 {
        self.t_end
            .unwrap_or(2.0 * self.pulses as f64 * self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Meanfield,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Propagator {
    #[default]
    Auto,
    Spectral,
    Krylov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub propagator: Propagator,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
    #[serde(default)]
    pub deterministic: bool,
    /// Split-step size of the mean-field channel.
    #[serde(default = "default_mf_dt")]
    pub mf_dt: f64,
}

fn default_cap() -> usize {
    fewboson::fock::DEFAULT_DIMENSION_CAP
}

fn default_mf_dt() -> f64 {
    0.005
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Exact,
            propagator: Propagator::Auto,
            dimension_cap: default_cap(),
            deterministic: false,
            mf_dt: default_mf_dt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// `F(t)`; the mean-field channel adds the orbital overlap.
    Fidelity,
    /// `P_{N0}^(band)` for every band and count.
    Bands,
    /// Weights of the SP/DP/T/Q number-state classes.
    Classes,
    /// Intrawell asymmetry of the outer wells.
    Cradle,
    /// Windowed variance of the middle well.
    Breathing,
    /// `n(k, t)` on the momentum grid, plus central and side-peak traces.
    Momentum,
    /// Natural occupations.
    Natural,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Fidelity => "fidelity",
            Observable::Bands => "bands",
            Observable::Classes => "classes",
            Observable::Cradle => "cradle",
            Observable::Breathing => "breathing",
            Observable::Momentum => "momentum",
            Observable::Natural => "natural",
        }
    }

    fn meanfield_supported(self) -> bool {
        matches!(
            self,
            Observable::Fidelity | Observable::Bands | Observable::Momentum
        )
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Write the binary trajectory checkpoint (exact mode).
    #[serde(default)]
    pub checkpoint: bool,
    /// Keep every n-th sample in the checkpoint.
    #[serde(default = "default_stride")]
    pub checkpoint_stride: usize,
    #[serde(default = "default_k_max")]
    pub k_max: f64,
    #[serde(default = "default_k_points")]
    pub k_points: usize,
}

fn default_observables() -> Vec<Observable> {
    vec![Observable::Fidelity, Observable::Bands, Observable::Natural]
}

fn default_stride() -> usize {
    1
}

fn default_k_max() -> f64 {
    4.0
}

fn default_k_points() -> usize {
    161
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            observables: default_observables(),
            directory: None,
            checkpoint: false,
            checkpoint_stride: default_stride(),
            k_max: default_k_max(),
            k_points: default_k_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanAxis {
    #[serde(rename = "g_f")]
    GFinal,
    #[serde(rename = "tau")]
    Tau,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::GFinal => "g_f",
            ScanAxis::Tau => "tau",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowChoice {
    /// Positive halves (`g = g_f`).
    #[default]
    Positive,
    Negative,
    /// The whole run.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Series file stem, e.g. `momentum_peaks`.
    #[serde(default = "default_series")]
    pub series: String,
    #[serde(default = "default_column")]
    pub column: String,
    #[serde(default)]
    pub windows: WindowChoice,
    #[serde(default = "default_pad")]
    pub pad: usize,
    #[serde(default)]
    pub hann: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_frequency: Option<f64>,
}

fn default_series() -> String {
    "fidelity".into()
}

fn default_column() -> String {
    "F".into()
}

fn default_pad() -> usize {
    4
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            series: default_series(),
            column: default_column(),
            windows: WindowChoice::Positive,
            pad: default_pad(),
            hann: false,
            max_frequency: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs: Vec<String> = Vec::new();
        let mut need = |ok: bool, field: &str, msg: String| {
            if !ok {
                errs.push(format!("{field}: {msg}"));
            }
        };
        let s = &self.system;
        need(s.particles >= 1, "system.particles", "must be at least 1".into());
        need(s.wells >= 1, "system.wells", "must be at least 1".into());
        need(
            s.depth > 0.0 && s.depth.is_finite(),
            "system.depth",
            format!("must be positive, got {}", s.depth),
        );
        need(s.orbitals >= 1, "system.orbitals", "must be at least 1".into());
        need(
            s.wells == 0 || s.orbitals % s.wells == 0,
            "system.orbitals",
            format!("{} is not a whole number of bands of {} wells", s.orbitals, s.wells),
        );
        need(
            s.grid_points() >= fewboson::lattice::POINTS_PER_WELL * s.wells,
            "system.grid_points",
            format!(
                "{} is below the floor of {} points per well",
                s.grid_points(),
                fewboson::lattice::POINTS_PER_WELL
            ),
        );
        need(
            s.grid_points() > s.orbitals,
            "system.grid_points",
            format!("{} points cannot hold {} orbitals", s.grid_points(), s.orbitals),
        );
        need(
            s.kinetic_prefactor > 0.0 && s.kinetic_prefactor.is_finite(),
            "system.kinetic_prefactor",
            format!("must be positive, got {}", s.kinetic_prefactor),
        );
        if let Some(b) = s.bands {
            need(
                b >= 1 && b * s.wells <= s.orbitals,
                "system.bands",
                format!("{b} bands of {} wells exceed {} orbitals", s.wells, s.orbitals),
            );
        }
        let sc = &self.schedule;
        need(sc.g_in >= 0.0 && sc.g_in.is_finite(), "schedule.g_in", format!("must be non-negative, got {}", sc.g_in));
        need(sc.g_f >= 0.0 && sc.g_f.is_finite(), "schedule.g_f", format!("must be non-negative, got {}", sc.g_f));
        need(sc.tau > 0.0 && sc.tau.is_finite(), "schedule.tau", format!("must be positive, got {}", sc.tau));
        need(sc.pulses >= 1, "schedule.pulses", "must be at least 1".into());
        if let Some(t) = sc.t_end {
            need(
                t.is_finite() && t >= 2.0 * sc.pulses as f64 * sc.tau,
                "schedule.t_end",
                format!("{t} does not cover 2 n_p tau = {}", 2.0 * sc.pulses as f64 * sc.tau),
            );
        }
        need(
            sc.sample_dt > 0.0 && sc.sample_dt.is_finite(),
            "schedule.sample_dt",
            format!("must be positive, got {}", sc.sample_dt),
        );
        let e = &self.engine;
        need(e.dimension_cap >= 1, "engine.dimension_cap", "must be at least 1".into());
        need(e.mf_dt > 0.0 && e.mf_dt.is_finite(), "engine.mf_dt", format!("must be positive, got {}", e.mf_dt));
        let o = &self.outputs;
        need(!o.observables.is_empty(), "outputs.observables", "list is empty".into());
        need(o.checkpoint_stride >= 1, "outputs.checkpoint_stride", "must be at least 1".into());
        need(o.k_max > 0.0 && o.k_max.is_finite(), "outputs.k_max", format!("must be positive, got {}", o.k_max));
        need(
            o.k_points >= 3 && o.k_points % 2 == 1,
            "outputs.k_points",
            format!("must be odd and at least 3, got {}", o.k_points),
        );
        for obs in &o.observables {
            if e.mode == Mode::Meanfield {
                need(
                    obs.meanfield_supported(),
                    "outputs.observables",
                    format!("{obs} is not available in meanfield mode"),
                );
            }
        }
        if o.observables.contains(&Observable::Breathing) {
            need(s.wells % 2 == 1, "outputs.observables", "breathing needs an odd well count".into());
        }
        if o.observables.iter().any(|x| matches!(x, Observable::Bands | Observable::Classes)) {
            need(
                s.bands() >= 1 && s.bands() * s.wells <= s.orbitals,
                "outputs.observables",
                "band observables need at least one complete band".into(),
            );
        }
        if let Some(scan) = &self.scan {
            need(!scan.values.is_empty(), "scan.values", "list is empty".into());
            for v in &scan.values {
                need(
                    v.is_finite() && *v > 0.0,
                    "scan.values",
                    format!("{v} is not finite and positive"),
                );
            }
        }
        let a = &self.analysis;
        need(a.pad >= 1, "analysis.pad", "must be at least 1".into());
        if let Some(w) = a.max_frequency {
            need(w > 0.0, "analysis.max_frequency", format!("must be positive, got {w}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errs))
        }
    }

    /// Copy with one scan axis value applied. For the pulse width the run
    /// length follows the pulses unless it was pinned longer.
    pub fn with_axis(&self, axis: ScanAxis, value: f64) -> RunConfig {
        let mut c = self.clone();
        c.scan = None;
        match axis {
            ScanAxis::GFinal => c.schedule.g_f = value,
            ScanAxis::Tau => {
                c.schedule.tau = value;
                let need = 2.0 * c.schedule.pulses as f64 * value;
                c.schedule.t_end = c.schedule.t_end.map(|t| t.max(need));
            }
        }
        c
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = preset("triple-well-double-pulse").unwrap().to_toml().replace("depth", "detph");
        match RunConfig::from_toml(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("detph"), "{msg}"),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let mut c = preset("triple-well-double-pulse").unwrap();
        c.schedule.tau = -1.0;
        c.system.depth = 0.0;
        c.outputs.k_points = 10;
        match c.validate() {
            Err(CliError::Validation(errs)) => {
                assert!(errs.iter().any(|e| e.starts_with("schedule.tau")), "{errs:?}");
                assert!(errs.iter().any(|e| e.starts_with("system.depth")));
                assert!(errs.iter().any(|e| e.starts_with("outputs.k_points")));
            }
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn empty_scan_is_rejected() {
        let mut c = preset("triple-well-double-pulse").unwrap();
        c.scan = Some(ScanConfig {
            axis: ScanAxis::GFinal,
            values: vec![],
        });
        assert!(matches!(c.validate(), Err(CliError::Validation(e)) if e[0].starts_with("scan.values")));
    }

    #[test]
    fn toml_round_trip() {
        for name in crate::presets::names() {
            let c = preset(name).unwrap();
            assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c, "{name}");
        }
    }

    #[test]
    fn meanfield_rejects_correlated_observables() {
        let mut c = preset("triple-well-double-pulse").unwrap();
        c.engine.mode = Mode::Meanfield;
        c.outputs.observables = vec![Observable::Classes];
        assert!(c.validate().is_err());
    }
}
