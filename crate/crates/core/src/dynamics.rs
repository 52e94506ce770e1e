//! Exact propagation under the piecewise-constant schedule.
//!
//! Within each constant-`g` interval the state evolves with
//! `exp(-i H(g) t)`, applied either through the spectral factorization of
//! `H(g)` or through a Lanczos (Krylov) approximation with an a-posteriori
//! error bound. Only `H(g_in)` and `H(g_f)` are ever built.

use faer::{Mat, Parallelism};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::hamiltonian::{tridiag_eigen, ManyBodyOperator, ManyBodySystem, SpectralOperator, DENSE_LIMIT};
use crate::protocol::PulseSchedule;
use crate::state::{norm, ManyBodyState};

/// Target error of one Krylov step.
pub const KRYLOV_TOL: f64 = 1e-10;

/// Step halvings tolerated before a Krylov step is declared failed.
pub const MAX_HALVINGS: usize = 10;

/// Default Krylov subspace size.
pub const KRYLOV_DIM: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagatorKind {
    /// Spectral up to [`DENSE_LIMIT`], Krylov above.
    #[default]
    Auto,
    Spectral,
    Krylov,
}

impl PropagatorKind {
    pub fn resolve(self, dim: usize) -> PropagatorKind {
        match self {
            PropagatorKind::Auto if dim <= DENSE_LIMIT => PropagatorKind::Spectral,
            PropagatorKind::Auto => PropagatorKind::Krylov,
            other => other,
        }
    }
}

/// Lanczos approximation of `exp(-i H t) psi` for `t` in a window.
#[derive(Debug, Clone)]
pub struct KrylovPropagator<'a> {
    op: ManyBodyOperator<'a>,
    max_dim: usize,
    tol: f64,
    exec: Exec,
}

/// Krylov subspace built from one starting vector.
struct KrylovSpace {
    basis: Vec<Vec<Complex64>>,
    values: Vec<f64>,
    /// `vecs[k * m + j]`: component `j` of tridiagonal eigenvector `k`.
    vecs: Vec<f64>,
    beta_last: f64,
    scale: f64,
}

impl KrylovSpace {
    /// Coefficients of `exp(-i T s) e_1` in the Lanczos basis.
    fn coefficients(&self, s: f64) -> Vec<Complex64> {
        let m = self.values.len();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            let q = &self.vecs[k * m..(k + 1) * m];
            let ph = Complex64::from_polar(q[0], -self.values[k] * s);
            for j in 0..m {
                out[j] += ph * q[j];
            }
        }
        out
    }

    fn error(&self, s: f64) -> f64 {
        if self.beta_last == 0.0 {
            return 0.0;
        }
        let c = self.coefficients(s);
        self.scale * self.beta_last * c[c.len() - 1].norm()
    }

    fn state(&self, s: f64, exec: Exec) -> Vec<Complex64> {
        let c = self.coefficients(s);
        let dim = self.basis[0].len();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        exec.for_each_mut(&mut out, |i, o| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (cj, v) in c.iter().zip(&self.basis) {
                acc += cj * v[i];
            }
            *o = acc * self.scale;
        });
        out
    }
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(op: ManyBodyOperator<'a>, exec: Exec) -> Self {
        Self {
            op,
            max_dim: KRYLOV_DIM,
            tol: KRYLOV_TOL,
            exec,
        }
    }

    pub fn with_subspace(mut self, max_dim: usize) -> Self {
        self.max_dim = max_dim.max(2);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn build(&self, psi: &[Complex64]) -> KrylovSpace {
        let dim = psi.len();
        let scale = norm(psi);
        let m_max = self.max_dim.min(dim);
        let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|c| c / scale).collect()];
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta = Vec::with_capacity(m_max);
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        let mut beta_last = 0.0;
        for j in 0..m_max {
            self.op.apply(&basis[j], &mut w, self.exec);
            let a = cdot(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for q in &basis {
                    let c = cdot(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = norm(&w);
            if b < 1e-12 * a.abs().max(1.0) {
                beta_last = 0.0;
                break;
            }
            if j + 1 == m_max {
                beta_last = b;
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|c| c / b).collect());
        }
        basis.truncate(alpha.len());
        let (values, vecs) = tridiag_eigen(&alpha, &beta[..alpha.len() - 1]);
        KrylovSpace {
            basis,
            values,
            vecs,
            beta_last,
            scale,
        }
    }

    /// `exp(-i H dt) psi`, adaptively sub-stepped.
    pub fn propagate(&self, psi: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
        let mut last = psi.to_vec();
        self.evolve(psi, &[dt], |_, v| {
            last = v.to_vec();
            Ok(())
        })?;
        if dt == 0.0 {
            return Ok(psi.to_vec());
        }
        Ok(last)
    }

    /// Evolves `psi` and calls `emit(k, state)` at every offset
    /// `offsets[k]` (ascending, nonnegative). Returns the state at the last
    /// offset.
    pub fn evolve<F>(&self, psi: &[Complex64], offsets: &[f64], mut emit: F) -> Result<Vec<Complex64>>
    where
        F: FnMut(usize, &[Complex64]) -> Result<()>,
    {
        let mut current = psi.to_vec();
        let mut t = 0.0;
        let mut next = 0;
        let mut step_hint = f64::INFINITY;
        while next < offsets.len() && offsets[next] <= t {
            emit(next, &current)?;
            next += 1;
        }
        let end = offsets.last().copied().unwrap_or(0.0);
        while t < end {
            let space = self.build(&current);
            if !step_hint.is_finite() {
                // a Krylov space of size m resolves roughly m / width of time
                let width = space.values.last().unwrap() - space.values[0];
                step_hint = 2.0 * space.values.len() as f64 / width.max(1e-12);
            }
            let mut step = (end - t).min(step_hint);
            let mut halvings = 0;
            loop {
                let err = space.error(step);
                if err <= self.tol {
                    break;
                }
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::KrylovConvergence { halvings: MAX_HALVINGS, error: err });
                }
                step *= 0.5;
            }
            // grow again after an easy step
            step_hint = if halvings == 0 { step * 1.5 } else { step };
            let stop = if end - (t + step) < 1e-12 * end.max(1.0) { end } else { t + step };
            while next < offsets.len() && offsets[next] < stop {
                let v = space.state(offsets[next] - t, self.exec);
                emit(next, &v)?;
                next += 1;
            }
            current = space.state(stop - t, self.exec);
            t = stop;
            while next < offsets.len() && offsets[next] <= t {
                emit(next, &current)?;
                next += 1;
            }
        }
        Ok(current)
    }
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Sample times: the uniform grid `k * sample_dt` up to `t_end` merged with
/// every interval boundary. Times closer than `1e-9 * sample_dt` collapse
/// to the boundary value.
pub fn sample_times(sched: &PulseSchedule, sample_dt: f64) -> Result<Vec<f64>> {
    if !(sample_dt > 0.0) || !sample_dt.is_finite() {
        return Err(invalid("sample_dt", format!("must be positive, got {sample_dt}")));
    }
    let t_end = sched.t_end();
    let eps = 1e-9 * sample_dt;
    let mut times: Vec<f64> = Vec::new();
    let count = (t_end / sample_dt + 1e-9).floor() as usize;
    for k in 0..=count {
        times.push(k as f64 * sample_dt);
    }
    for iv in sched.intervals() {
        times.push(iv.start);
        times.push(iv.end);
    }
    times.sort_by(f64::total_cmp);
    let bounds: Vec<f64> = sched
        .intervals()
        .iter()
        .flat_map(|iv| [iv.start, iv.end])
        .collect();
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        if t > t_end + eps {
            continue;
        }
        match out.last_mut() {
            Some(prev) if t - *prev < eps => {
                // keep the exact boundary value
                if bounds.contains(&t) {
                    *prev = t;
                }
            }
            _ => out.push(t),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub sample_dt: f64,
    pub propagator: PropagatorKind,
    pub exec: Exec,
}

impl EvolveOptions {
    pub fn new(sample_dt: f64) -> Self {
        Self {
            sample_dt,
            propagator: PropagatorKind::Auto,
            exec: Exec::default(),
        }
    }

    pub fn with_propagator(mut self, kind: PropagatorKind) -> Self {
        self.propagator = kind;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

/// Samples in time order with the interaction in force over the interval
/// that produced them.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub schedule: PulseSchedule,
    pub states: Vec<ManyBodyState>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time()).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Propagates `psi0` through the schedule, handing each sample to
/// `observer` as soon as it is produced.
pub fn evolve_schedule<F>(
    system: &ManyBodySystem,
    psi0: &ManyBodyState,
    sched: &PulseSchedule,
    opts: EvolveOptions,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(&ManyBodyState) -> Result<()>,
{
    if psi0.dim() != system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} coefficients, basis has {}",
            psi0.dim(),
            system.dim()
        )));
    }
    let times = sample_times(sched, opts.sample_dt)?;
    let intervals = sched.intervals();
    let kind = opts.propagator.resolve(system.dim());
    let exec = opts.exec;
    let spectral: Vec<(f64, SpectralOperator)> = if kind == PropagatorKind::Spectral {
        let mut gs: Vec<f64> = Vec::new();
        for iv in &intervals {
            if !gs.contains(&iv.g) {
                gs.push(iv.g);
            }
        }
        gs.into_iter()
            .map(|g| (g, system.operator(g).factorize(exec)))
            .collect()
    } else {
        Vec::new()
    };
    observer(&psi0.clone().with_time(0.0))?;
    let mut psi = psi0.coeffs().to_vec();
    let mut cursor = 1;
    for iv in &intervals {
        let mut offsets = Vec::new();
        let mut stamps = Vec::new();
        while cursor < times.len() && times[cursor] <= iv.end {
            offsets.push(times[cursor] - iv.start);
            stamps.push(times[cursor]);
            cursor += 1;
        }
        // boundaries are always sample times, but never rely on it
        if stamps.last() != Some(&iv.end) {
            offsets.push(iv.end - iv.start);
        }
        let mut emit = |k: usize, v: &[Complex64]| -> Result<()> {
            if k < stamps.len() {
                observer(&ManyBodyState::from_parts_unchecked(v.to_vec(), stamps[k]))?;
            }
            Ok(())
        };
        psi = match kind {
            PropagatorKind::Spectral => {
                let op = &spectral.iter().find(|(g, _)| *g == iv.g).expect("factorized").1;
                spectral_segment(op, &psi, &offsets, exec, &mut emit)?
            }
            _ => KrylovPropagator::new(system.operator(iv.g), exec).evolve(&psi, &offsets, &mut emit)?,
        };
    }
    Ok(())
}

/// Collects every sample of [`evolve_schedule`] in memory.
pub fn evolve_collect(
    system: &ManyBodySystem,
    psi0: &ManyBodyState,
    sched: &PulseSchedule,
    opts: EvolveOptions,
) -> Result<TrajectoryRecord> {
    let mut states = Vec::new();
    evolve_schedule(system, psi0, sched, opts, |s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(TrajectoryRecord {
        schedule: sched.clone(),
        states,
    })
}

/// Spectral evolution to several offsets, batched through one GEMM per
/// block of samples. Returns the state at the last offset.
fn spectral_segment<F>(
    op: &SpectralOperator,
    psi: &[Complex64],
    offsets: &[f64],
    exec: Exec,
    mut emit: F,
) -> Result<Vec<Complex64>>
where
    F: FnMut(usize, &[Complex64]) -> Result<()>,
{
    const BLOCK: usize = 64;
    let n = op.dim();
    let c = op.to_eigenbasis(psi, exec);
    let mut last = psi.to_vec();
    for (b, chunk) in offsets.chunks(BLOCK).enumerate() {
        let cols = 2 * chunk.len();
        let rhs = Mat::from_fn(n, cols, |k, j| {
            let ph = c[k] * Complex64::from_polar(1.0, -op.values()[k] * chunk[j / 2]);
            if j % 2 == 0 {
                ph.re
            } else {
                ph.im
            }
        });
        let mut out = Mat::<f64>::zeros(n, cols);
        faer::linalg::matmul::matmul(
            out.as_mut(),
            op.vectors().as_ref(),
            rhs.as_ref(),
            None,
            1.0,
            Parallelism::None,
        );
        for j in 0..chunk.len() {
            let v: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(out.read(i, 2 * j), out.read(i, 2 * j + 1)))
                .collect();
            emit(b * BLOCK + j, &v)?;
            last = v;
        }
    }
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ground_state;
    use crate::lattice::{solve_one_body, GridSpec};

    fn system(particles: usize, n_orb: usize) -> ManyBodySystem {
        let grid = GridSpec::new(3, 120, 10.0).unwrap();
        let basis = solve_one_body(&grid, n_orb).unwrap();
        ManyBodySystem::new(&basis, particles).unwrap()
    }

    fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn sample_grid_contains_boundaries() {
        let s = PulseSchedule::new(0.1, 1.0, 8.5, 5, 100.0).unwrap();
        let t = sample_times(&s, 0.3).unwrap();
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 100.0);
        for w in t.windows(2) {
            assert!(w[1] > w[0]);
        }
        for iv in s.intervals() {
            assert!(t.contains(&iv.start) && t.contains(&iv.end));
        }
        assert!(sample_times(&s, 0.0).is_err());
    }

    #[test]
    fn eigenstates_only_acquire_a_phase() {
        let sys = system(3, 6);
        let g = 0.8;
        let spec = sys.operator(g).factorize(Exec::Sequential);
        let (e, psi) = spec.ground().unwrap();
        let dt = 3.7;
        let phase = Complex64::from_polar(1.0, -e * dt);
        let want: Vec<Complex64> = psi.coeffs().iter().map(|c| c * phase).collect();
        let out = spec.propagate(psi.coeffs(), dt, Exec::Sequential);
        assert!(dist(&out, &want) < 1e-9);
        let kry = KrylovPropagator::new(sys.operator(g), Exec::Sequential);
        let out = kry.propagate(psi.coeffs(), dt).unwrap();
        assert!(dist(&out, &want) < 1e-9);
        assert_eq!(kry.propagate(psi.coeffs(), 0.0).unwrap(), psi.coeffs());
    }

    #[test]
    fn semigroup_and_krylov_agreement() {
        let sys = system(3, 6);
        let (_, psi) = ground_state(&sys, 0.1, Exec::Sequential).unwrap();
        let spec = sys.operator(2.0).factorize(Exec::Sequential);
        let full = spec.propagate(psi.coeffs(), 5.0, Exec::Sequential);
        let half = spec.propagate(psi.coeffs(), 2.5, Exec::Sequential);
        let twice = spec.propagate(&half, 2.5, Exec::Sequential);
        assert!(dist(&full, &twice) < 1e-9);
        let kry = KrylovPropagator::new(sys.operator(2.0), Exec::Sequential);
        let k = kry.propagate(psi.coeffs(), 5.0).unwrap();
        assert!(dist(&full, &k) < 1e-8);
    }

    #[test]
    fn halving_limit_is_enforced() {
        let sys = system(3, 6);
        let (_, psi) = ground_state(&sys, 0.1, Exec::Sequential).unwrap();
        let kry = KrylovPropagator::new(sys.operator(3.0), Exec::Sequential)
            .with_subspace(2)
            .with_tolerance(1e-300);
        assert!(matches!(
            kry.propagate(psi.coeffs(), 10.0),
            Err(Error::KrylovConvergence { .. })
        ));
    }

    #[test]
    fn schedule_conserves_norm_and_segment_energy() {
        let sys = system(2, 3);
        let (_, psi0) = ground_state(&sys, 0.1, Exec::Sequential).unwrap();
        let sched = PulseSchedule::new(0.1, 2.0, 50.0, 2, 250.0).unwrap();
        for kind in [PropagatorKind::Spectral, PropagatorKind::Krylov] {
            let opts = EvolveOptions::new(0.5).with_propagator(kind);
            let traj = evolve_collect(&sys, &psi0, &sched, opts).unwrap();
            assert_eq!(traj.times(), sample_times(&sched, 0.5).unwrap());
            for s in &traj.states {
                assert!((s.norm() - 1.0).abs() < 1e-8);
            }
            for iv in sched.intervals() {
                let op = sys.operator(iv.g);
                let e: Vec<f64> = traj
                    .states
                    .iter()
                    .filter(|s| s.time() >= iv.start && s.time() <= iv.end)
                    .map(|s| op.expectation(s.coeffs(), Exec::Sequential))
                    .collect();
                for x in &e {
                    assert!((x - e[0]).abs() < 1e-8 * e[0].abs());
                }
            }
        }
    }

    #[test]
    fn spectral_and_krylov_trajectories_agree() {
        let sys = system(2, 3);
        let (_, psi0) = ground_state(&sys, 0.1, Exec::Sequential).unwrap();
        let sched = PulseSchedule::new(0.1, 3.0, 10.0, 3, 80.0).unwrap();
        let a = evolve_collect(&sys, &psi0, &sched, EvolveOptions::new(0.25).with_propagator(PropagatorKind::Spectral)).unwrap();
        let b = evolve_collect(&sys, &psi0, &sched, EvolveOptions::new(0.25).with_propagator(PropagatorKind::Krylov)).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.states.iter().zip(&b.states) {
            assert_eq!(x.time(), y.time());
            assert!((psi0.fidelity(x) - psi0.fidelity(y)).abs() < 1e-7);
        }
    }

    #[test]
    fn no_quench_means_no_dynamics() {
        let sys = system(3, 6);
        let (_, psi0) = ground_state(&sys, 0.4, Exec::Sequential).unwrap();
        let sched = PulseSchedule::new(0.4, 0.4, 10.0, 2, 60.0).unwrap();
        let traj = evolve_collect(&sys, &psi0, &sched, EvolveOptions::new(1.0)).unwrap();
        for s in &traj.states {
            assert!((psi0.fidelity(s) - 1.0).abs() < 1e-9);
        }
    }
}
