//! Multiple-interaction-quench schedule.
//!
//! The interaction is `g_f` on the half-open intervals `[2i tau, (2i+1) tau)`
//! for `i = 0..n_p` and `g_in` everywhere else. Step edges are
//! right-continuous: at `t = 0` the quench is already in effect.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    g_in: f64,
    g_f: f64,
    tau: f64,
    pulses: usize,
    t_end: f64,
}

/// Constant-interaction segment `[start, end)` (the last one is closed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub g: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

impl PulseSchedule {
    pub fn new(g_in: f64, g_f: f64, tau: f64, pulses: usize, t_end: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !g_in.is_finite() {
            problems.push("g_in must be finite".to_string());
        }
        if !g_f.is_finite() {
            problems.push("g_f must be finite".to_string());
        }
        if !(tau > 0.0) || !tau.is_finite() {
            problems.push(format!("tau must be positive, got {tau}"));
        }
        if pulses == 0 {
            problems.push("pulse count must be at least 1".to_string());
        }
        if !(t_end >= 2.0 * pulses as f64 * tau) || !t_end.is_finite() {
            problems.push(format!(
                "t_end = {t_end} must cover all pulses (>= 2 n_p tau = {})",
                2.0 * pulses as f64 * tau
            ));
        }
        if !problems.is_empty() {
            return Err(invalid("schedule", problems.join("; ")));
        }
        Ok(Self {
            g_in,
            g_f,
            tau,
            pulses,
            t_end,
        })
    }

    /// One pulse of width `tau` followed by `g_in` until `t_end`.
    pub fn single(g_in: f64, g_f: f64, tau: f64, t_end: f64) -> Result<Self> {
        Self::new(g_in, g_f, tau, 1, t_end)
    }

    pub fn g_in(&self) -> f64 {
        self.g_in
    }

    pub fn g_f(&self) -> f64 {
        self.g_f
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn amplitude(&self) -> f64 {
        self.g_f - self.g_in
    }

    /// End of the last positive half, `(2 n_p - 1) tau`.
    pub fn last_pulse_end(&self) -> f64 {
        (2 * self.pulses - 1) as f64 * self.tau
    }

    pub fn with_g_f(&self, g_f: f64) -> Result<Self> {
        Self::new(self.g_in, g_f, self.tau, self.pulses, self.t_end)
    }

    pub fn with_tau(&self, tau: f64, t_end: f64) -> Result<Self> {
        Self::new(self.g_in, self.g_f, tau, self.pulses, t_end)
    }

    /// Interaction strength at time `t >= 0`.
    pub fn g_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("time must be >= 0, got {t}")));
        }
        Ok(if self.in_pulse(t) { self.g_f } else { self.g_in })
    }

    fn in_pulse(&self, t: f64) -> bool {
        self.positive_halves()
            .iter()
            .any(|&(a, b)| t >= a && t < b)
    }

    /// Positive halves `[2i tau, (2i+1) tau)`.
    pub fn positive_halves(&self) -> Vec<(f64, f64)> {
        (0..self.pulses)
            .map(|i| ((2 * i) as f64 * self.tau, (2 * i + 1) as f64 * self.tau))
            .collect()
    }

    /// Negative halves, including the final tail after the last pulse.
    pub fn negative_halves(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = (0..self.pulses)
            .map(|i| ((2 * i + 1) as f64 * self.tau, (2 * i + 2) as f64 * self.tau))
            .collect();
        if let Some(last) = out.last_mut() {
            last.1 = self.t_end;
        }
        out.retain(|(a, b)| b > a);
        out
    }

    /// Constant-`g` segments covering `[0, t_end]`, adjacent equal values
    /// merged.
    pub fn intervals(&self) -> Vec<Interval> {
        let mut raw = Vec::with_capacity(2 * self.pulses + 1);
        for i in 0..2 * self.pulses {
            let start = i as f64 * self.tau;
            let end = ((i + 1) as f64 * self.tau).min(self.t_end);
            let g = if i % 2 == 0 { self.g_f } else { self.g_in };
            raw.push(Interval { start, end, g });
        }
        let tail = 2.0 * self.pulses as f64 * self.tau;
        if self.t_end > tail {
            raw.push(Interval {
                start: tail,
                end: self.t_end,
                g: self.g_in,
            });
        }
        let mut merged: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw.into_iter().filter(|iv| !iv.is_empty()) {
            match merged.last_mut() {
                Some(prev) if prev.g == iv.g => prev.end = iv.end,
                _ => merged.push(iv),
            }
        }
        merged
    }
}
