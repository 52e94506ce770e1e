//! Spectral post-processing of exported series.

use std::path::Path;

use fewboson::analysis::{averaged_spectrum, branch_scan, peaks, power_law_fit, BranchScan, Peak};
use fewboson::io::Series;
use fewboson::{PowerLawFit, PulseSchedule, Spectrum, SpectrumOptions};

use crate::config::{AnalysisConfig, WindowChoice};
use crate::error::CliError;

pub fn options(a: &AnalysisConfig) -> SpectrumOptions {
    SpectrumOptions {
        pad: a.pad,
        hann: a.hann,
        max_frequency: a.max_frequency,
    }
}

pub fn windows(sched: &PulseSchedule, choice: WindowChoice) -> Vec<(f64, f64)> {
    match choice {
        WindowChoice::Positive => sched.positive_halves(),
        WindowChoice::Negative => sched.negative_halves(),
        WindowChoice::All => vec![(0.0, sched.t_end())],
    }
}

/// Rebuilds the schedule from the metadata written with every series.
pub fn schedule_from_meta(s: &Series) -> Result<PulseSchedule, CliError> {
    let get = |k: &str| -> Result<f64, CliError> {
        s.meta(k)
            .ok_or_else(|| CliError::Config(format!("series metadata lacks {k}")))?
            .parse::<f64>()
            .map_err(|e| CliError::Config(format!("series metadata {k}: {e}")))
    };
    Ok(PulseSchedule::new(
        get("g_in")?,
        get("g_f")?,
        get("tau")?,
        get("pulses")? as usize,
        get("t_end")?,
    )?)
}

/// One analyzed column: its window-averaged spectrum and strongest peak.
#[derive(Debug, Clone)]
pub struct ColumnAnalysis {
    pub spectrum: Spectrum,
    pub dominant: Option<Peak>,
}

pub fn analyze_series(
    s: &Series,
    a: &AnalysisConfig,
    length: Option<f64>,
) -> Result<ColumnAnalysis, CliError> {
    let sched = schedule_from_meta(s)?;
    let times = s
        .column("t")
        .ok_or_else(|| CliError::Config("series has no t column".into()))?;
    let values = s.column(&a.column).ok_or_else(|| {
        CliError::Config(format!(
            "column {} not found (have {})",
            a.column,
            s.columns.join(", ")
        ))
    })?;
    let label = format!("{}:{}", a.series, a.column);
    let spectrum = averaged_spectrum(
        &label,
        &times,
        &values,
        &windows(&sched, a.windows),
        length,
        options(a),
    )?;
    let dominant = peaks(&spectrum).into_iter().next();
    Ok(ColumnAnalysis { spectrum, dominant })
}

pub fn spectrum_series(c: &ColumnAnalysis) -> Result<Series, CliError> {
    let mut out = Series::new(["omega", "magnitude"])
        .with_meta("label", &c.spectrum.label)
        .with_meta("window_length", c.spectrum.window.1 - c.spectrum.window.0);
    if let Some(p) = c.dominant {
        out = out
            .with_meta("dominant_frequency", p.frequency)
            .with_meta("dominant_magnitude", p.magnitude);
    }
    for (w, m) in c.spectrum.frequencies.iter().zip(&c.spectrum.magnitudes) {
        out.push(vec![*w, *m])?;
    }
    Ok(out)
}

/// Branch-scan matrix as a series: one row per parameter value, one column
/// per frequency.
pub fn branch_series(axis: &str, b: &BranchScan) -> Result<Series, CliError> {
    let mut cols = vec![axis.to_string()];
    cols.extend(b.frequencies.iter().map(|w| format!("w{w:.5}")));
    let mut out = Series::new(cols).with_meta("label", &b.label);
    for j in 0..b.parameters.len() {
        let mut row = vec![b.parameters[j]];
        row.extend(b.column(j));
        out.push(row)?;
    }
    Ok(out)
}

/// Aggregate over a scan: branch matrix, dominant frequency per value and,
/// for an interaction scan, the power-law fit of the dominant frequency.
#[derive(Debug, Clone)]
pub struct ScanAnalysis {
    pub branch: BranchScan,
    pub dominant: Vec<(f64, Option<Peak>)>,
    pub fit: Option<Result<PowerLawFit, String>>,
}

pub fn analyze_scan(
    axis: &str,
    runs: &[(f64, Series)],
    a: &AnalysisConfig,
) -> Result<ScanAnalysis, CliError> {
    // common window length so every spectrum lands on one grid
    let mut shortest = f64::INFINITY;
    for (_, s) in runs {
        let sched = schedule_from_meta(s)?;
        for (x, y) in windows(&sched, a.windows) {
            shortest = shortest.min(y - x);
        }
    }
    let mut spectra = Vec::new();
    let mut dominant = Vec::new();
    for (v, s) in runs {
        let c = analyze_series(s, a, Some(shortest))?;
        dominant.push((*v, c.dominant));
        spectra.push((*v, c.spectrum));
    }
    let branch = branch_scan(&format!("{}:{}", a.series, a.column), &spectra)?;
    let fit = if axis == "g_f" {
        let pts: Vec<(f64, f64)> = dominant
            .iter()
            .filter_map(|(g, p)| p.map(|p| (*g, p.frequency)))
            .collect();
        (pts.len() >= 4).then(|| power_law_fit(&pts).map_err(|e| e.to_string()))
    } else {
        None
    };
    Ok(ScanAnalysis {
        branch,
        dominant,
        fit,
    })
}

pub fn dominant_series(axis: &str, sa: &ScanAnalysis) -> Result<Series, CliError> {
    let mut out = Series::new([axis, "omega1", "magnitude"]);
    if let Some(Ok(f)) = &sa.fit {
        out = out
            .with_meta("fit", "omega1 = a g_f^b + c")
            .with_meta("a", f.a)
            .with_meta("b", f.b)
            .with_meta("c", f.c)
            .with_meta("rms", f.rms);
    }
    for (v, p) in &sa.dominant {
        match p {
            Some(p) => out.push(vec![*v, p.frequency, p.magnitude])?,
            None => out.push(vec![*v, f64::NAN, 0.0])?,
        }
    }
    Ok(out)
}

/// Writes the spectrum of one run directory next to its series.
pub fn analyze_run_dir(dir: &Path, out: &Path, a: &AnalysisConfig) -> Result<ColumnAnalysis, CliError> {
    let series = Series::load(&dir.join(format!("{}.tsv", a.series)))?;
    let c = analyze_series(&series, a, None)?;
    std::fs::create_dir_all(out)?;
    spectrum_series(&c)?.save(&out.join(format!("spectrum_{}_{}.tsv", a.series, a.column)))?;
    Ok(c)
}

pub fn branch_file(a: &AnalysisConfig) -> String {
    format!("branch_{}_{}.tsv", a.series, a.column)
}

pub fn write_scan_analysis(out: &Path, axis: &str, sa: &ScanAnalysis, a: &AnalysisConfig) -> Result<(), CliError> {
    branch_series(axis, &sa.branch)?.save(&out.join(branch_file(a)))?;
    dominant_series(axis, sa)?.save(&out.join("dominant.tsv"))?;
    Ok(())
}
