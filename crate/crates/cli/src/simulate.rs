//! Builds the system described by a [`RunConfig`], propagates it and
//! collects the requested observables as series.

use std::collections::BTreeMap;
use std::path::Path;

use fewboson::io::{CheckpointHeader, CheckpointWriter, Series};
use fewboson::meanfield::{self, CondensateOrbital};
use fewboson::{
    build_wannier, evolve_schedule, ground_state, solve_lowest, DensityProbe, EvolveOptions,
    Exec, GridSpec, ManyBodyState, ManyBodySystem, MomentumGrid, MomentumProbe, PropagatorKind,
    PulseSchedule, RegionProbe, SinglePartBasis, WannierProjector,
};

use crate::config::{Mode, Observable, Propagator, RunConfig};
use crate::error::CliError;

/// Momentum of the first side peak: the reciprocal lattice vector `2 pi / pi`.
pub const SIDE_PEAK_K: f64 = 2.0;

/// Series keyed by file stem, plus scalar results for the manifest.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub series: BTreeMap<String, Series>,
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn get(&self, stem: &str) -> Option<&Series> {
        self.series.get(stem)
    }
}

pub fn grid(cfg: &RunConfig) -> Result<GridSpec, CliError> {
    let s = &cfg.system;
    Ok(GridSpec::with_kinetic(
        s.wells,
        s.grid_points(),
        s.depth,
        s.kinetic_prefactor,
    )?)
}

pub fn schedule(cfg: &RunConfig) -> Result<PulseSchedule, CliError> {
    let s = &cfg.schedule;
    Ok(PulseSchedule::new(s.g_in, s.g_f, s.tau, s.pulses, s.t_end())?)
}

fn propagator(p: Propagator) -> PropagatorKind {
    match p {
        Propagator::Auto => PropagatorKind::Auto,
        Propagator::Spectral => PropagatorKind::Spectral,
        Propagator::Krylov => PropagatorKind::Krylov,
    }
}

/// Metadata stamped on every series.
fn meta(cfg: &RunConfig, series: Series) -> Series {
    let s = &cfg.system;
    let sc = &cfg.schedule;
    let mode = match cfg.engine.mode {
        Mode::Exact => "exact",
        Mode::Meanfield => "meanfield",
    };
    series
        .with_meta("mode", mode)
        .with_meta("particles", s.particles)
        .with_meta("wells", s.wells)
        .with_meta("depth", s.depth)
        .with_meta("orbitals", s.orbitals)
        .with_meta("grid_points", s.grid_points())
        .with_meta("kinetic_prefactor", s.kinetic_prefactor)
        .with_meta("g_in", sc.g_in)
        .with_meta("g_f", sc.g_f)
        .with_meta("tau", sc.tau)
        .with_meta("pulses", sc.pulses)
        .with_meta("t_end", sc.t_end())
}

struct MomentumColumns {
    grid: MomentumGrid,
    center: usize,
    sides: (usize, usize),
}

impl MomentumColumns {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let grid = MomentumGrid::symmetric(cfg.outputs.k_max, cfg.outputs.k_points)?;
        let nearest = |k: f64| {
            grid.k
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - k).abs().total_cmp(&(b.1 - k).abs()))
                .map(|(i, _)| i)
                .expect("non-empty grid")
        };
        let center = nearest(0.0);
        let sides = (nearest(-SIDE_PEAK_K), nearest(SIDE_PEAK_K));
        Ok(Self {
            grid,
            center,
            sides,
        })
    }

    fn series(&self, cfg: &RunConfig) -> (Series, Series) {
        let mut cols = vec!["t".to_string()];
        cols.extend(self.grid.k.iter().map(|k| format!("k{k:+.4}")));
        let full = meta(cfg, Series::new(cols)).with_meta("k_max", cfg.outputs.k_max);
        let peaks = meta(cfg, Series::new(["t", "n_center", "n_side"]))
            .with_meta("side_k", self.grid.k[self.sides.1]);
        (full, peaks)
    }

    fn push(&self, t: f64, nk: &[f64], full: &mut Series, peaks: &mut Series) -> fewboson::Result<()> {
        let mut row = Vec::with_capacity(nk.len() + 1);
        row.push(t);
        row.extend_from_slice(nk);
        full.push(row)?;
        let side = 0.5 * (nk[self.sides.0] + nk[self.sides.1]);
        peaks.push(vec![t, nk[self.center], side])?;
        Ok(())
    }
}

/// Runs the configured simulation. When `checkpoint` is given (exact mode
/// only) the trajectory is streamed there.
pub fn simulate(cfg: &RunConfig, exec: Exec, checkpoint: Option<&Path>) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    match cfg.engine.mode {
        Mode::Exact => simulate_exact(cfg, exec, checkpoint),
        Mode::Meanfield => simulate_meanfield(cfg),
    }
}

/// System, one-body basis and initial state of an exact run.
pub struct Prepared {
    pub grid: GridSpec,
    pub basis: SinglePartBasis,
    pub system: ManyBodySystem,
    pub energy: f64,
    pub psi0: ManyBodyState,
}

pub fn prepare(cfg: &RunConfig, exec: Exec) -> Result<Prepared, CliError> {
    let grid = grid(cfg)?;
    // refuse before any expensive work
    let dim = fewboson::fock::dimension(cfg.system.particles, cfg.system.orbitals);
    if dim > cfg.engine.dimension_cap as u128 {
        return Err(fewboson::Error::DimensionCap {
            dimension: dim,
            cap: cfg.engine.dimension_cap,
        }
        .into());
    }
    let basis = solve_lowest(&grid, cfg.system.orbitals)?;
    let system = ManyBodySystem::with_cap(&basis, cfg.system.particles, cfg.engine.dimension_cap)?;
    let (energy, psi0) = ground_state(&system, cfg.schedule.g_in, exec)?;
    Ok(Prepared {
        grid,
        basis,
        system,
        energy,
        psi0,
    })
}

fn simulate_exact(cfg: &RunConfig, exec: Exec, checkpoint: Option<&Path>) -> Result<RunOutput, CliError> {
    let sched = schedule(cfg)?;
    let p = prepare(cfg, exec)?;
    let obs = &cfg.outputs.observables;
    let wants = |o: Observable| obs.contains(&o);
    let n = cfg.system.particles;

    let density = DensityProbe::new(p.system.fock());
    let region = (wants(Observable::Cradle) || wants(Observable::Breathing))
        .then(|| RegionProbe::new(&p.basis, n));
    let projector = if wants(Observable::Bands) || wants(Observable::Classes) {
        let wannier = build_wannier(&p.basis, cfg.system.bands())?;
        Some(WannierProjector::new(p.system.fock(), &p.basis, &wannier)?)
    } else {
        None
    };
    let momentum = if wants(Observable::Momentum) {
        let cols = MomentumColumns::new(cfg)?;
        let probe = MomentumProbe::new(&p.basis, cols.grid.clone());
        Some((cols, probe))
    } else {
        None
    };
    let bands = cfg.system.bands();

    let mut fidelity = meta(cfg, Series::new(["t", "F"]));
    let mut band_cols = vec!["t".to_string()];
    for b in 0..bands {
        band_cols.extend((0..=n).map(|k| format!("P_b{b}_n{k}")));
    }
    let mut band_series = meta(cfg, Series::new(band_cols));
    let mut classes = meta(cfg, Series::new(["t", "SP", "DP", "T", "Q", "other", "captured"]));
    let mut cradle = meta(cfg, Series::new(["t", "drho_L", "drho_R"]));
    let mut breathing = meta(cfg, Series::new(["t", "sigma2", "middle"]));
    let mut natural = meta(
        cfg,
        Series::new(std::iter::once("t".to_string()).chain((1..=cfg.system.orbitals).map(|i| format!("lambda{i}")))),
    );
    let (mut nk_full, mut nk_peaks) = match &momentum {
        Some((cols, _)) => cols.series(cfg),
        None => (Series::default(), Series::default()),
    };

    let times = fewboson::dynamics::sample_times(&sched, cfg.schedule.sample_dt)?;
    let stride = cfg.outputs.checkpoint_stride;
    let mut writer = match checkpoint {
        Some(path) => {
            let header = CheckpointHeader {
                particles: n as u32,
                n_orb: cfg.system.orbitals as u32,
                wells: cfg.system.wells as u32,
                depth: cfg.system.depth,
                kinetic: cfg.system.kinetic_prefactor,
                g_in: cfg.schedule.g_in,
                g_f: cfg.schedule.g_f,
                tau: cfg.schedule.tau,
                pulses: cfg.schedule.pulses as u32,
                t_end: cfg.schedule.t_end(),
                count: times.len().div_ceil(stride) as u64,
                dim: p.system.dim() as u64,
            };
            Some(CheckpointWriter::create(path, header)?)
        }
        None => None,
    };

    let mut lowest_natural: f64 = 0.0;
    let mut min_captured: f64 = 1.0;
    let mut sample = 0usize;
    let opts = EvolveOptions::new(cfg.schedule.sample_dt)
        .with_propagator(propagator(cfg.engine.propagator))
        .with_exec(exec);
    evolve_schedule(&p.system, &p.psi0, &sched, opts, |state| {
        let t = state.time();
        if let Some(w) = writer.as_mut() {
            if sample % stride == 0 {
                w.push(state)?;
            }
        }
        sample += 1;
        if wants(Observable::Fidelity) {
            fidelity.push(vec![t, p.psi0.fidelity(state)])?;
        }
        if let Some(proj) = &projector {
            if wants(Observable::Bands) {
                let mut row = vec![t];
                for b in 0..bands {
                    row.extend((0..=n).map(|k| proj.band_occupation_direct(state, k, b)));
                }
                band_series.push(row)?;
            }
            if wants(Observable::Classes) {
                let pr = proj.project(state);
                min_captured = min_captured.min(pr.captured);
                let mut row = vec![t];
                row.extend(proj.class_weights(&pr).iter().map(|(_, w)| *w));
                row.push(pr.captured);
                classes.push(row)?;
            }
        }
        let needs_density = region.is_some() || momentum.is_some() || wants(Observable::Natural);
        if needs_density {
            let d = density.density(state);
            if let Some(r) = &region {
                if wants(Observable::Cradle) {
                    let (l, rr) = r.asymmetry(&d);
                    cradle.push(vec![t, l, rr])?;
                }
                if wants(Observable::Breathing) {
                    let s2 = r.breathing(&d)?;
                    let mid = r.middle_population(&d).unwrap_or(0.0);
                    breathing.push(vec![t, s2, mid])?;
                }
            }
            if let Some((cols, probe)) = &momentum {
                let nk = probe.distribution(&d);
                cols.push(t, &nk, &mut nk_full, &mut nk_peaks)?;
            }
            if wants(Observable::Natural) {
                let mut occ = d.natural_occupations();
                occ.reverse();
                lowest_natural = lowest_natural.max(*occ.last().unwrap_or(&0.0));
                let mut row = vec![t];
                row.extend(occ);
                natural.push(row)?;
            }
        }
        Ok(())
    })?;
    if let Some(w) = writer {
        w.finish()?;
    }

    let mut out = RunOutput::default();
    out.summary.insert("ground_energy".into(), p.energy);
    out.summary.insert("dimension".into(), p.system.dim() as f64);
    out.summary.insert("samples".into(), sample as f64);
    let mut put = |o: Observable, stem: &str, s: Series| {
        if wants(o) {
            out.series.insert(stem.to_string(), s);
        }
    };
    put(Observable::Fidelity, "fidelity", fidelity);
    put(Observable::Bands, "bands", band_series);
    put(Observable::Classes, "classes", classes);
    put(Observable::Cradle, "cradle", cradle);
    put(Observable::Breathing, "breathing", breathing);
    put(Observable::Momentum, "momentum", nk_full);
    put(Observable::Momentum, "momentum_peaks", nk_peaks);
    put(Observable::Natural, "natural", natural);
    if wants(Observable::Natural) {
        out.summary.insert("lowest_natural_occupation".into(), lowest_natural);
        if lowest_natural >= 1e-4 {
            out.notes.push(format!(
                "lowest natural occupation reaches {lowest_natural:.3e}; the orbital basis may be too small"
            ));
        }
    }
    if wants(Observable::Classes) {
        out.summary.insert("min_captured_weight".into(), min_captured);
        if min_captured < fewboson::observables::CAPTURE_WARNING {
            out.notes.push(format!(
                "Wannier projection captures only {min_captured:.3} of the state"
            ));
        }
    }
    Ok(out)
}

fn simulate_meanfield(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let sched = schedule(cfg)?;
    let grid = grid(cfg)?;
    let n = cfg.system.particles;
    let obs = &cfg.outputs.observables;
    let wants = |o: Observable| obs.contains(&o);
    let phi0 = meanfield::mf_ground(&grid, cfg.schedule.g_in, n)?;
    let wannier = if wants(Observable::Bands) {
        let basis = solve_lowest(&grid, cfg.system.orbitals)?;
        Some(build_wannier(&basis, cfg.system.bands())?)
    } else {
        None
    };
    let momentum = if wants(Observable::Momentum) {
        Some(MomentumColumns::new(cfg)?)
    } else {
        None
    };
    let bands = cfg.system.bands();
    let mut fidelity = meta(cfg, Series::new(["t", "F", "F_orbital"]));
    let mut band_cols = vec!["t".to_string()];
    for b in 0..bands {
        band_cols.extend((0..=n).map(|k| format!("P_b{b}_n{k}")));
    }
    band_cols.push("captured".into());
    let mut band_series = meta(cfg, Series::new(band_cols));
    let (mut nk_full, mut nk_peaks) = match &momentum {
        Some(cols) => cols.series(cfg),
        None => (Series::default(), Series::default()),
    };
    let mut sample = 0usize;
    meanfield::mf_evolve_with(
        &grid,
        &phi0,
        &sched,
        cfg.engine.mf_dt,
        cfg.schedule.sample_dt,
        |phi: &CondensateOrbital| {
            let t = phi.time();
            sample += 1;
            if wants(Observable::Fidelity) {
                fidelity.push(vec![t, phi0.fidelity(phi), phi0.orbital_fidelity(phi)])?;
            }
            if let Some(w) = &wannier {
                let mut row = vec![t];
                for b in 0..bands {
                    row.extend(meanfield::band_occupations(phi, w, b));
                }
                let c = meanfield::wannier_amplitudes(phi, w);
                let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
                row.push(total.powi(n as i32));
                band_series.push(row)?;
            }
            if let Some(cols) = &momentum {
                let nk = meanfield::momentum_distribution(&grid, phi, &cols.grid.k);
                cols.push(t, &nk, &mut nk_full, &mut nk_peaks)?;
            }
            Ok(())
        },
    )?;
    let mut out = RunOutput::default();
    out.summary.insert("samples".into(), sample as f64);
    let mut put = |o: Observable, stem: &str, s: Series| {
        if wants(o) {
            out.series.insert(stem.to_string(), s);
        }
    };
    put(Observable::Fidelity, "fidelity", fidelity);
    put(Observable::Bands, "bands", band_series);
    put(Observable::Momentum, "momentum", nk_full);
    put(Observable::Momentum, "momentum_peaks", nk_peaks);
    Ok(out)
}

/// Ground-state report: energy, density and momentum profiles, natural
/// occupations.
pub fn ground(cfg: &RunConfig, exec: Exec) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let mut out = RunOutput::default();
    let cols = MomentumColumns::new(cfg)?;
    match cfg.engine.mode {
        Mode::Exact => {
            let p = prepare(cfg, exec)?;
            let d = DensityProbe::new(p.system.fock()).density(&p.psi0);
            let rho = d.on_grid(&p.basis);
            let np = p.grid.n_points();
            let mut dens = meta(cfg, Series::new(["x", "rho"]));
            for (i, x) in p.grid.points().into_iter().enumerate() {
                dens.push(vec![x, n_times(cfg, rho[i * np + i].re)])?;
            }
            let nk = MomentumProbe::new(&p.basis, cols.grid.clone()).distribution(&d);
            let mut mom = meta(cfg, Series::new(["k", "n"]));
            for (k, v) in cols.grid.k.iter().zip(nk) {
                mom.push(vec![*k, v])?;
            }
            let mut nat = meta(cfg, Series::new(["index", "lambda"]));
            let mut occ = d.natural_occupations();
            occ.reverse();
            for (i, l) in occ.iter().enumerate() {
                nat.push(vec![(i + 1) as f64, *l])?;
            }
            out.summary.insert("ground_energy".into(), p.energy);
            out.summary.insert("dimension".into(), p.system.dim() as f64);
            out.summary
                .insert("lowest_natural_occupation".into(), *occ.last().unwrap_or(&0.0));
            out.series.insert("ground_density".into(), dens);
            out.series.insert("ground_momentum".into(), mom);
            out.series.insert("ground_natural".into(), nat);
        }
        Mode::Meanfield => {
            let grid = grid(cfg)?;
            let phi = meanfield::mf_ground(&grid, cfg.schedule.g_in, cfg.system.particles)?;
            let mut dens = meta(cfg, Series::new(["x", "rho"]));
            for (x, r) in grid.points().into_iter().zip(phi.density()) {
                dens.push(vec![x, n_times(cfg, r)])?;
            }
            let nk = meanfield::momentum_distribution(&grid, &phi, &cols.grid.k);
            let mut mom = meta(cfg, Series::new(["k", "n"]));
            for (k, v) in cols.grid.k.iter().zip(nk) {
                mom.push(vec![*k, v])?;
            }
            let mut ss = meanfield::SplitStep::new(&grid, cfg.system.particles)?;
            out.summary.insert(
                "energy_per_particle".into(),
                ss.energy(phi.values(), cfg.schedule.g_in),
            );
            out.summary.insert("variance".into(), phi.variance(&grid));
            out.series.insert("ground_density".into(), dens);
            out.series.insert("ground_momentum".into(), mom);
        }
    }
    Ok(out)
}

fn n_times(cfg: &RunConfig, v: f64) -> f64 {
    cfg.system.particles as f64 * v
}
