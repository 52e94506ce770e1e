//! Spectra of observable series, dominant frequencies and the power-law fit
//! of the momentum-transfer frequency.
//!
//! The transform is `(1/pi) int_0^T e^{i omega t} f(t) dt`, evaluated with
//! trapezoid weights on the actual sample times so the extra samples placed
//! on interval boundaries need no special treatment.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Minimum number of samples in a transformed window.
pub const MIN_SAMPLES: usize = 16;

/// A peak must exceed this multiple of the median magnitude.
pub const NOISE_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Frequency oversampling: the grid spacing is `2 pi / (pad T)`.
    pub pad: usize,
    /// Hann taper over the window.
    pub hann: bool,
    /// Highest frequency evaluated; defaults to the Nyquist frequency of
    /// the median sample spacing.
    pub max_frequency: Option<f64>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            pad: 4,
            hann: false,
            max_frequency: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub label: String,
    pub window: (f64, f64),
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// `(1/pi) int |f| dt` of the untransformed window; magnitudes below
    /// `1e-12` of it are rounding noise.
    pub reference: f64,
}

impl Spectrum {
    /// Width of one natural frequency bin, `2 pi / T`.
    pub fn bin(&self) -> f64 {
        2.0 * PI / (self.window.1 - self.window.0)
    }

    pub fn median_magnitude(&self) -> f64 {
        median(&self.magnitudes)
    }
}

/// Spectrum of `values(times)` restricted to `window` (default: the whole
/// series), mean subtracted.
pub fn spectrum(
    label: &str,
    times: &[f64],
    values: &[f64],
    window: Option<(f64, f64)>,
    opts: SpectrumOptions,
) -> Result<Spectrum> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} times, {} values",
            times.len(),
            values.len()
        )));
    }
    if opts.pad == 0 {
        return Err(invalid("pad", "must be at least 1"));
    }
    let (a, b) = window.unwrap_or((
        times.first().copied().unwrap_or(0.0),
        times.last().copied().unwrap_or(0.0),
    ));
    let eps = 1e-9 * (b - a).abs().max(1.0);
    let (t, f): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= a - eps && t <= b + eps)
        .map(|(&t, &v)| (t - a, v))
        .unzip();
    if t.len() < MIN_SAMPLES {
        return Err(Error::SeriesTooShort {
            len: t.len(),
            min: MIN_SAMPLES,
        });
    }
    let span = t[t.len() - 1] - t[0];
    if !(span > 0.0) {
        return Err(invalid("window", "needs positive length"));
    }
    let mut w = trapezoid_weights(&t);
    if opts.hann {
        for (wi, ti) in w.iter_mut().zip(&t) {
            *wi *= 0.5 * (1.0 - (2.0 * PI * ti / span).cos());
        }
    }
    let wsum: f64 = w.iter().sum();
    let mean = w.iter().zip(&f).map(|(wi, fi)| wi * fi).sum::<f64>() / wsum;
    let g: Vec<f64> = w.iter().zip(&f).map(|(wi, fi)| wi * (fi - mean)).collect();
    let reference = w.iter().zip(&f).map(|(wi, fi)| wi * fi.abs()).sum::<f64>() / PI;

    let mut dts: Vec<f64> = t.windows(2).map(|p| p[1] - p[0]).collect();
    dts.retain(|&d| d > 0.0);
    let nyquist = PI / median(&dts);
    let w_max = opts.max_frequency.unwrap_or(nyquist).min(nyquist);
    let dw = 2.0 * PI / (opts.pad as f64 * span);
    let count = (w_max / dw).floor() as usize + 1;
    let frequencies: Vec<f64> = (0..count).map(|j| j as f64 * dw).collect();
    let magnitudes = frequencies
        .iter()
        .map(|&om| {
            let (mut re, mut im) = (0.0, 0.0);
            for (gi, ti) in g.iter().zip(&t) {
                let (s, c) = (om * ti).sin_cos();
                re += gi * c;
                im += gi * s;
            }
            (re * re + im * im).sqrt() / PI
        })
        .collect();
    Ok(Spectrum {
        label: label.to_string(),
        window: (a, b),
        frequencies,
        magnitudes,
        reference,
    })
}

fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (t[i + 1] - t[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Local maximum of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub frequency: f64,
    pub magnitude: f64,
}

/// Local maxima above `NOISE_FACTOR` times the median magnitude and above
/// one natural bin, strongest first, each refined by a parabola through
/// three bins.
pub fn peaks(s: &Spectrum) -> Vec<Peak> {
    let floor = (NOISE_FACTOR * s.median_magnitude()).max(1e-12 * s.reference);
    let m = &s.magnitudes;
    let mut out: Vec<Peak> = (1..m.len().saturating_sub(1))
        .filter(|&i| m[i] > m[i - 1] && m[i] >= m[i + 1])
        .filter(|&i| s.frequencies[i] >= s.bin() && m[i] > floor)
        .map(|i| refine(s, i))
        .collect();
    out.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    out
}

fn refine(s: &Spectrum, i: usize) -> Peak {
    let (y0, y1, y2) = (s.magnitudes[i - 1], s.magnitudes[i], s.magnitudes[i + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let dw = s.frequencies[1] - s.frequencies[0];
    if denom.abs() < 1e-300 {
        return Peak {
            frequency: s.frequencies[i],
            magnitude: y1,
        };
    }
    let delta = (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5);
    Peak {
        frequency: s.frequencies[i] + delta * dw,
        magnitude: y1 - 0.25 * (y0 - y2) * delta,
    }
}

/// Mean of the window spectra of a series. Every window is cut to a common
/// length (`length`, or the shortest window) so all spectra share one
/// frequency grid.
pub fn averaged_spectrum(
    label: &str,
    times: &[f64],
    values: &[f64],
    windows: &[(f64, f64)],
    length: Option<f64>,
    opts: SpectrumOptions,
) -> Result<Spectrum> {
    if windows.is_empty() {
        return Err(invalid("windows", "need at least one window"));
    }
    let shortest = windows
        .iter()
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    let span = match length {
        Some(l) if l > 0.0 && l <= shortest => l,
        Some(l) => {
            return Err(invalid(
                "length",
                format!("{l} must be positive and fit the shortest window ({shortest})"),
            ))
        }
        None => shortest,
    };
    let mut avg: Option<Spectrum> = None;
    for &(a, _) in windows {
        let s = spectrum(label, times, values, Some((a, a + span)), opts)?;
        match &mut avg {
            None => avg = Some(s),
            Some(acc) => {
                let n = acc.magnitudes.len().min(s.magnitudes.len());
                acc.magnitudes.truncate(n);
                acc.frequencies.truncate(n);
                for (x, y) in acc.magnitudes.iter_mut().zip(&s.magnitudes) {
                    *x += y;
                }
                acc.reference += s.reference;
            }
        }
    }
    let mut s = avg.expect("at least one window");
    let k = windows.len() as f64;
    s.magnitudes.iter_mut().for_each(|x| *x /= k);
    s.reference /= k;
    Ok(s)
}

/// Dominant nonzero frequency of a series over a set of windows (for
/// example the positive halves of a schedule), from [`averaged_spectrum`].
pub fn dominant_frequency(
    times: &[f64],
    values: &[f64],
    windows: &[(f64, f64)],
    opts: SpectrumOptions,
) -> Result<Peak> {
    let s = averaged_spectrum("", times, values, windows, None, opts)?;
    peaks(&s)
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoPeak(format!("nothing above {NOISE_FACTOR} x median magnitude")))
}

/// Spectra of several runs stacked on a common frequency grid: rows are
/// frequencies, columns the scanned parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchScan {
    pub label: String,
    pub parameters: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// Row-major `frequencies.len() x parameters.len()`.
    pub magnitudes: Vec<f64>,
}

impl BranchScan {
    pub fn column(&self, j: usize) -> Vec<f64> {
        let n = self.parameters.len();
        (0..self.frequencies.len())
            .map(|i| self.magnitudes[i * n + j])
            .collect()
    }
}

pub fn branch_scan(label: &str, columns: &[(f64, Spectrum)]) -> Result<BranchScan> {
    let first = columns
        .first()
        .ok_or_else(|| invalid("scan", "no spectra to stack"))?;
    let rows = columns
        .iter()
        .map(|(_, s)| s.frequencies.len())
        .min()
        .unwrap_or(0);
    for (_, s) in columns {
        let d0 = first.1.frequencies.get(1).copied().unwrap_or(0.0);
        let d1 = s.frequencies.get(1).copied().unwrap_or(0.0);
        if (d0 - d1).abs() > 1e-12 * d0.abs().max(1.0) {
            return Err(Error::DimensionMismatch("spectra use different frequency grids".into()));
        }
    }
    let n = columns.len();
    let mut magnitudes = vec![0.0; rows * n];
    for (j, (_, s)) in columns.iter().enumerate() {
        for i in 0..rows {
            magnitudes[i * n + j] = s.magnitudes[i];
        }
    }
    Ok(BranchScan {
        label: label.to_string(),
        parameters: columns.iter().map(|c| c.0).collect(),
        frequencies: first.1.frequencies[..rows].to_vec(),
        magnitudes,
    })
}

/// `omega = a g^b + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

impl PowerLawFit {
    pub fn eval(&self, g: f64) -> f64 {
        self.a * g.powf(self.b) + self.c
    }
}

/// Levenberg-Marquardt least squares with starts at `b = 0.5, 1, 2`.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 5 {
        return Err(invalid("points", format!("need at least 5, got {}", points.len())));
    }
    if points.iter().any(|&(g, w)| !(g > 0.0) || !w.is_finite()) {
        return Err(invalid("points", "amplitudes must be positive and values finite"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let spread = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = ys.iter().map(|y| y.abs()).fold(0.0, f64::max).max(1e-300);
    if spread <= 1e-9 * scale {
        return Err(Error::FitFailure("data are flat; exponent unidentifiable".into()));
    }
    let mut best: Option<PowerLawFit> = None;
    let mut last_err = String::new();
    for b0 in [0.5, 1.0, 2.0] {
        match levenberg_marquardt(&pts, b0) {
            Ok(fit) => {
                if best.map_or(true, |f| fit.rms < f.rms) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = e.to_string(),
        }
    }
    let fit = best.ok_or_else(|| Error::FitFailure(format!("no start converged: {last_err}")))?;
    if !(fit.a > 0.0 && fit.b > 0.0 && fit.c > 0.0) {
        return Err(Error::FitFailure(format!(
            "nonpositive parameter: a = {}, b = {}, c = {}",
            fit.a, fit.b, fit.c
        )));
    }
    Ok(fit)
}

fn levenberg_marquardt(pts: &[(f64, f64)], b0: f64) -> Result<PowerLawFit> {
    // linear least squares for (a, c) at fixed b
    let linear = |b: f64| -> Option<(f64, f64)> {
        let n = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(g, y) in pts {
            let x = g.powf(b);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let det = n * sxx - sx * sx;
        if det.abs() < 1e-14 * (n * sxx).max(1e-300) {
            return None;
        }
        let a = (n * sxy - sx * sy) / det;
        Some((a, (sy - a * sx) / n))
    };
    let (a0, c0) = linear(b0).ok_or_else(|| Error::FitFailure("degenerate amplitudes".into()))?;
    let mut p = [a0, b0, c0];
    let cost = |p: &[f64; 3]| -> f64 {
        pts.iter()
            .map(|&(g, y)| {
                let r = p[0] * g.powf(p[1]) + p[2] - y;
                r * r
            })
            .sum()
    };
    let mut lambda = 1e-3;
    let mut current = cost(&p);
    for _ in 0..500 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(g, y) in pts {
            let gb = g.powf(p[1]);
            let r = p[0] * gb + p[2] - y;
            let j = [gb, p[0] * gb * g.ln(), 1.0];
            for u in 0..3 {
                jtr[u] += j[u] * r;
                for v in 0..3 {
                    jtj[u][v] += j[u] * j[v];
                }
            }
        }
        let diag_max = (0..3).map(|u| jtj[u][u]).fold(0.0, f64::max);
        if gram_condition(&jtj) > 1e14 || diag_max == 0.0 {
            return Err(Error::FitFailure("normal equations are singular".into()));
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj;
            for u in 0..3 {
                m[u][u] += lambda * jtj[u][u].max(1e-12 * diag_max);
            }
            let step = match solve3(m, jtr) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial = [p[0] - step[0], p[1] - step[1], p[2] - step[2]];
            let c = cost(&trial);
            if c.is_finite() && c < current {
                let rel = (current - c) / current.max(1e-300);
                p = trial;
                current = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-14 {
                    return Ok(finish(p, current, pts.len()));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            return Ok(finish(p, current, pts.len()));
        }
    }
    Ok(finish(p, current, pts.len()))
}

fn finish(p: [f64; 3], cost: f64, n: usize) -> PowerLawFit {
    PowerLawFit {
        a: p[0],
        b: p[1],
        c: p[2],
        rms: (cost / n as f64).sqrt(),
    }
}

/// Ratio of the largest to smallest eigenvalue bound of a 3x3 Gram matrix,
/// after diagonal scaling.
fn gram_condition(m: &[[f64; 3]; 3]) -> f64 {
    let d: Vec<f64> = (0..3).map(|i| m[i][i].sqrt().max(1e-300)).collect();
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = m[i][j] / (d[i] * d[j]);
        }
    }
    let det = det3(&s);
    if det <= 0.0 {
        return f64::INFINITY;
    }
    // trace^3 / det bounds the condition number of a 3x3 SPD matrix
    3.0f64.powi(3) / det
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(&m);
    if d.abs() < 1e-300 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        out[k] = det3(&mk) / d;
    }
    Some(out)
}
