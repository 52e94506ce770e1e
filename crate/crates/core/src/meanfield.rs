//! Single-orbital (Gross-Pitaevskii) propagation on the DVR grid.
//!
//! The orbital obeys `i d/dt phi = [T + V + g (N - 1) |phi|^2] phi` with the
//! same kinetic operator as the one-body solver. Propagation is Strang
//! split-step: the local factor acts on grid values, the kinetic factor acts
//! on sine-mode amplitudes, so the hard walls are built in.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dynamics::sample_times;
use crate::error::{invalid, Error, Result};
use crate::lattice::{GridSpec, WannierSet};
use crate::protocol::PulseSchedule;
use crate::sine::SineTransform;

/// Tolerance on `| int |phi|^2 dx - 1 |`.
pub const ORBITAL_NORM_TOL: f64 = 1e-9;
/// Largest change of the final overlap accepted when the step is halved.
pub const STEP_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CondensateOrbital {
    /// `phi(x_i)` on the interior grid points.
    values: Vec<Complex64>,
    spacing: f64,
    particles: usize,
    time: f64,
}

impl CondensateOrbital {
    pub fn new(values: Vec<Complex64>, spacing: f64, particles: usize, time: f64) -> Result<Self> {
        if particles == 0 {
            return Err(invalid("particles", "must be at least 1"));
        }
        let n = grid_norm(&values, spacing);
        if (n - 1.0).abs() > ORBITAL_NORM_TOL {
            return Err(Error::InvalidParameter {
                name: "orbital",
                reason: format!("norm {n} differs from 1"),
            });
        }
        Ok(Self {
            values,
            spacing,
            particles,
            time,
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm(&self) -> f64 {
        grid_norm(&self.values, self.spacing)
    }

    /// `<self|other> = int conj(phi) psi dx`.
    pub fn overlap(&self, other: &CondensateOrbital) -> Complex64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.spacing
    }

    /// `|<self|other>|^2`.
    pub fn orbital_fidelity(&self, other: &CondensateOrbital) -> f64 {
        self.overlap(other).norm_sqr()
    }

    /// Overlap of the two `N`-boson product states, `|<self|other>|^(2N)`.
    pub fn fidelity(&self, other: &CondensateOrbital) -> f64 {
        self.orbital_fidelity(other).powi(self.particles as i32)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Position variance of `|phi|^2`.
    pub fn variance(&self, grid: &GridSpec) -> f64 {
        let x = grid.points();
        let rho = self.density();
        let h = self.spacing;
        let m1: f64 = rho.iter().zip(&x).map(|(r, x)| r * x).sum::<f64>() * h;
        let m2: f64 = rho.iter().zip(&x).map(|(r, x)| r * x * x).sum::<f64>() * h;
        m2 - m1 * m1
    }
}

fn grid_norm(values: &[Complex64], h: f64) -> f64 {
    (values.iter().map(|c| c.norm_sqr()).sum::<f64>() * h).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub dtau: f64,
    pub max_steps: usize,
    /// Stop once the energy changes by less than this in one step.
    pub tolerance: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            dtau: 0.005,
            max_steps: 400_000,
            tolerance: 1e-10,
        }
    }
}

/// Split-step propagator for one grid; holds the transform and the kinetic
/// spectrum.
#[derive(Debug)]
pub struct SplitStep {
    grid: GridSpec,
    particles: usize,
    sine: SineTransform,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl SplitStep {
    pub fn new(grid: &GridSpec, particles: usize) -> Result<Self> {
        if particles == 0 {
            return Err(invalid("particles", "must be at least 1"));
        }
        let n = grid.n_points();
        Ok(Self {
            grid: grid.clone(),
            particles,
            sine: SineTransform::new(n),
            kinetic: (1..=n).map(|j| grid.mode_energy(j)).collect(),
            potential: grid.potential(),
            scratch: Vec::new(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn coupling(&self, g: f64) -> f64 {
        g * (self.particles - 1) as f64
    }

    /// Energy per particle, `<T> + <V> + (g (N-1) / 2) int |phi|^4`.
    pub fn energy(&mut self, values: &[Complex64], g: f64) -> f64 {
        let h = self.grid.spacing();
        let mut modes = values.to_vec();
        self.sine.apply(&mut modes, &mut self.scratch);
        let kin: f64 = modes
            .iter()
            .zip(&self.kinetic)
            .map(|(c, e)| c.norm_sqr() * e)
            .sum::<f64>()
            * h;
        let gc = self.coupling(g);
        let local: f64 = values
            .iter()
            .zip(&self.potential)
            .map(|(c, v)| {
                let r = c.norm_sqr();
                v * r + 0.5 * gc * r * r
            })
            .sum::<f64>()
            * h;
        kin + local
    }

    fn local_half(&self, values: &mut [Complex64], g: f64, dt: f64, imaginary: bool) {
        let gc = self.coupling(g);
        for (c, v) in values.iter_mut().zip(&self.potential) {
            let w = (v + gc * c.norm_sqr()) * 0.5 * dt;
            *c *= if imaginary {
                Complex64::new((-w).exp(), 0.0)
            } else {
                Complex64::from_polar(1.0, -w)
            };
        }
    }

    fn kinetic_full(&mut self, values: &mut [Complex64], dt: f64, imaginary: bool) {
        self.sine.apply(values, &mut self.scratch);
        for (c, e) in values.iter_mut().zip(&self.kinetic) {
            *c *= if imaginary {
                Complex64::new((-e * dt).exp(), 0.0)
            } else {
                Complex64::from_polar(1.0, -e * dt)
            };
        }
        self.sine.apply(values, &mut self.scratch);
    }

    /// One real-time Strang step at constant `g`.
    pub fn step(&mut self, values: &mut [Complex64], g: f64, dt: f64) {
        self.local_half(values, g, dt, false);
        self.kinetic_full(values, dt, false);
        self.local_half(values, g, dt, false);
    }

    fn relax_step(&mut self, values: &mut [Complex64], g: f64, dtau: f64) {
        self.local_half(values, g, dtau, true);
        self.kinetic_full(values, dtau, true);
        self.local_half(values, g, dtau, true);
        let n = grid_norm(values, self.grid.spacing());
        for c in values.iter_mut() {
            *c /= n;
        }
    }

    /// Advances by `span` at constant `g` in equal steps no longer than `dt`.
    pub fn advance(&mut self, values: &mut [Complex64], g: f64, span: f64, dt: f64) {
        if span <= 0.0 {
            return;
        }
        let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
        let sub = span / steps as f64;
        for _ in 0..steps {
            self.step(values, g, sub);
        }
    }
}

/// Imaginary-time relaxation to the lowest stationary orbital at coupling `g`.
pub fn mf_ground(grid: &GridSpec, g: f64, particles: usize) -> Result<CondensateOrbital> {
    mf_ground_with(grid, g, particles, RelaxOptions::default())
}

pub fn mf_ground_with(
    grid: &GridSpec,
    g: f64,
    particles: usize,
    opts: RelaxOptions,
) -> Result<CondensateOrbital> {
    if !(g >= 0.0) || !g.is_finite() {
        return Err(invalid("g", format!("must be finite and non-negative, got {g}")));
    }
    if !(opts.dtau > 0.0) || opts.max_steps == 0 {
        return Err(invalid("dtau", "relaxation needs a positive step and max_steps > 0"));
    }
    let mut ss = SplitStep::new(grid, particles)?;
    let x = grid.points();
    let h = grid.spacing();
    let l = grid.length();
    // lowest box mode as the ansatz; it overlaps the ground orbital for any depth
    let mut values: Vec<Complex64> = x
        .iter()
        .map(|&xi| Complex64::new((PI * (xi + 0.5 * l) / l).sin(), 0.0))
        .collect();
    let n0 = grid_norm(&values, h);
    values.iter_mut().for_each(|c| *c /= n0);

    let mut energy = ss.energy(&values, g);
    let mut delta = f64::INFINITY;
    for _ in 0..opts.max_steps {
        ss.relax_step(&mut values, g, opts.dtau);
        let e = ss.energy(&values, g);
        delta = (e - energy).abs();
        energy = e;
        if delta < opts.tolerance {
            return CondensateOrbital::new(values, h, particles, 0.0);
        }
    }
    Err(Error::Relaxation {
        steps: opts.max_steps,
        delta,
    })
}

/// Real-time propagation through the schedule, one orbital per sample time.
///
/// The run is repeated once at `dt / 2`; if the final orbital overlap with
/// the initial orbital moves by more than [`STEP_CHECK_TOL`] the result is
/// refused with a suggested step.
pub fn mf_evolve(
    grid: &GridSpec,
    phi0: &CondensateOrbital,
    sched: &PulseSchedule,
    dt: f64,
    sample_dt: f64,
) -> Result<Vec<CondensateOrbital>> {
    let mut out = Vec::new();
    mf_evolve_with(grid, phi0, sched, dt, sample_dt, |phi| {
        out.push(phi.clone());
        Ok(())
    })?;
    Ok(out)
}

pub fn mf_evolve_with<F>(
    grid: &GridSpec,
    phi0: &CondensateOrbital,
    sched: &PulseSchedule,
    dt: f64,
    sample_dt: f64,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(&CondensateOrbital) -> Result<()>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if phi0.values.len() != grid.n_points() {
        return Err(Error::DimensionMismatch(format!(
            "orbital has {} grid values, grid has {}",
            phi0.values.len(),
            grid.n_points()
        )));
    }
    let times = sample_times(sched, sample_dt)?;
    let coarse = run_schedule(grid, phi0, sched, &times, dt, &mut |_| Ok(()))?;
    let fine = run_schedule(grid, phi0, sched, &times, 0.5 * dt, &mut |_| Ok(()))?;
    let change = (phi0.orbital_fidelity(&coarse) - phi0.orbital_fidelity(&fine)).abs();
    if change > STEP_CHECK_TOL {
        // Strang error scales as dt^2
        let factor = (change / STEP_CHECK_TOL).sqrt() * 1.5;
        return Err(Error::StepSize(
            format!("halving dt = {dt} moved the final overlap by {change:.3e}"),
            dt / factor,
        ));
    }
    run_schedule(grid, phi0, sched, &times, dt, &mut observer)?;
    Ok(())
}

fn run_schedule(
    grid: &GridSpec,
    phi0: &CondensateOrbital,
    sched: &PulseSchedule,
    times: &[f64],
    dt: f64,
    observer: &mut dyn FnMut(&CondensateOrbital) -> Result<()>,
) -> Result<CondensateOrbital> {
    let mut ss = SplitStep::new(grid, phi0.particles)?;
    let mut values = phi0.values.clone();
    let stamp = |values: &[Complex64], t: f64| CondensateOrbital {
        values: values.to_vec(),
        spacing: phi0.spacing,
        particles: phi0.particles,
        time: t,
    };
    observer(&stamp(&values, 0.0))?;
    let mut cursor = 1;
    for iv in sched.intervals() {
        let mut now = iv.start;
        while cursor < times.len() && times[cursor] <= iv.end {
            ss.advance(&mut values, iv.g, times[cursor] - now, dt);
            now = times[cursor];
            observer(&stamp(&values, now))?;
            cursor += 1;
        }
        ss.advance(&mut values, iv.g, iv.end - now, dt);
    }
    Ok(stamp(&values, sched.t_end()))
}

/// Wannier amplitudes `c_w = <w|phi>`.
pub fn wannier_amplitudes(phi: &CondensateOrbital, wannier: &WannierSet) -> Vec<Complex64> {
    (0..wannier.len())
        .map(|w| {
            wannier
                .function(w)
                .iter()
                .zip(&phi.values)
                .map(|(&f, c)| c * f)
                .sum::<Complex64>()
                * phi.spacing
        })
        .collect()
}

/// Mean-field band occupation probabilities `P_{N0}^(band)` for
/// `N0 = 0..=N`, from the multinomial expansion of the product state.
pub fn band_occupations(phi: &CondensateOrbital, wannier: &WannierSet, band: usize) -> Vec<f64> {
    let c = wannier_amplitudes(phi, wannier);
    let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let inside: f64 = (0..wannier.wells())
        .map(|i| c[wannier.index(band, i)].norm_sqr())
        .sum();
    let rest = (total - inside).max(0.0);
    let n = phi.particles;
    (0..=n)
        .map(|n0| binomial(n, n0) * inside.powi(n0 as i32) * rest.powi((n - n0) as i32))
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `n(k) = |int phi(x) e^{-ikx} dx|^2 / 2 pi`, normalized per particle.
pub fn momentum_distribution(grid: &GridSpec, phi: &CondensateOrbital, ks: &[f64]) -> Vec<f64> {
    let x = grid.points();
    let h = phi.spacing;
    ks.iter()
        .map(|&k| {
            let f: Complex64 = x
                .iter()
                .zip(&phi.values)
                .map(|(&xi, c)| c * Complex64::from_polar(1.0, -k * xi))
                .sum::<Complex64>()
                * h;
            f.norm_sqr() / (2.0 * PI)
        })
        .collect()
}
