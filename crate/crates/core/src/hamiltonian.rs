//! Many-body Hamiltonian in the Fock basis of one-body eigen-orbitals.
//!
//! `H(g) = sum_a eps_a n_a + (g/2) sum_abcd U_abcd a_a^+ a_b^+ a_c a_d`.
//!
//! The interaction is applied matrix-free through the pair-lowering table:
//! `w = A v` lands in the `N - 2` boson space, a dense GEMM applies the pair
//! kernel, and `A^+` scatters back. Dense assembly uses the same tables.

use faer::{Mat, Parallelism};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fock::{FockBasis, LoweringTable, DEFAULT_DIMENSION_CAP};
use crate::interaction::InteractionTensor;
use crate::lattice::SinglePartBasis;
use crate::linalg::{self, SymEigen};
use crate::state::ManyBodyState;

/// Largest dimension handled with dense diagonalization by default.
pub const DENSE_LIMIT: usize = 5000;

/// Relative gap below which the ground state counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Everything needed to apply `H(g)` for any `g`.
#[derive(Debug, Clone)]
pub struct ManyBodySystem {
    fock: FockBasis,
    energies: Vec<f64>,
    tensor: InteractionTensor,
    diagonal: Vec<f64>,
    pairs: Option<LoweringTable>,
    kernel: Vec<f64>,
}

impl ManyBodySystem {
    pub fn new(basis: &SinglePartBasis, particles: usize) -> Result<Self> {
        Self::with_cap(basis, particles, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(basis: &SinglePartBasis, particles: usize, cap: usize) -> Result<Self> {
        let fock = FockBasis::with_cap(particles, basis.n_orb(), cap)?;
        let tensor = InteractionTensor::new(basis);
        Ok(Self::from_parts(fock, basis.energies().to_vec(), tensor))
    }

    pub fn from_parts(fock: FockBasis, energies: Vec<f64>, tensor: InteractionTensor) -> Self {
        assert_eq!(fock.n_orb(), energies.len());
        assert_eq!(fock.n_orb(), tensor.n_orb());
        let diagonal = fock
            .states()
            .map(|s| s.iter().zip(&energies).map(|(&n, e)| n as f64 * e).sum())
            .collect();
        let pairs = fock.pair_lowering().map(|(_, t)| t);
        let kernel = tensor.pair_kernel();
        Self {
            fock,
            energies,
            tensor,
            diagonal,
            pairs,
            kernel,
        }
    }

    pub fn fock(&self) -> &FockBasis {
        &self.fock
    }

    pub fn dim(&self) -> usize {
        self.fock.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn tensor(&self) -> &InteractionTensor {
        &self.tensor
    }

    /// One-body diagonal `sum_a n_a eps_a`.
    pub fn one_body_diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn operator(&self, g: f64) -> ManyBodyOperator<'_> {
        ManyBodyOperator { system: self, g }
    }
}

/// `H(g)` as a matrix-free linear operator.
#[derive(Debug, Clone, Copy)]
pub struct ManyBodyOperator<'a> {
    system: &'a ManyBodySystem,
    g: f64,
}

impl<'a> ManyBodyOperator<'a> {
    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn system(&self) -> &'a ManyBodySystem {
        self.system
    }

    /// `out = H v`.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64], exec: Exec) {
        let sys = self.system;
        let dim = sys.dim();
        assert_eq!(v.len(), dim);
        assert_eq!(out.len(), dim);
        exec.for_each_mut(out, |s, o| *o = v[s] * sys.diagonal[s]);
        let table = match &sys.pairs {
            Some(t) if self.g != 0.0 => t,
            _ => return,
        };
        let np = table.n_ops;
        let lower = table.target_dim;
        // column 2t holds Re, 2t + 1 holds Im of (A v)_t
        let mut w = vec![0.0; np * 2 * lower];
        exec.for_each_chunk(&mut w, 2 * np, |t, col| {
            for &(q, s, amp) in table.inverse(t) {
                let x = v[s as usize];
                col[q as usize] += amp * x.re;
                col[np + q as usize] += amp * x.im;
            }
        });
        let mut y = vec![0.0; np * 2 * lower];
        {
            let k = faer::mat::from_column_major_slice::<f64, _, _>(&sys.kernel, np, np);
            let wm = faer::mat::from_column_major_slice::<f64, _, _>(&w, np, 2 * lower);
            let ym = faer::mat::from_column_major_slice_mut::<f64, _, _>(&mut y, np, 2 * lower);
            // the kernel is symmetric, so reading it column-major is fine
            faer::linalg::matmul::matmul(ym, k, wm, None, self.g, Parallelism::None);
        }
        exec.for_each_mut(out, |s, o| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(q, t, amp) in table.forward(s) {
                let base = 2 * np * t as usize + q as usize;
                acc.re += amp * y[base];
                acc.im += amp * y[base + np];
            }
            *o += acc;
        });
    }

    /// `<v|H|v>` for a normalized state.
    pub fn expectation(&self, v: &[Complex64], exec: Exec) -> f64 {
        let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply(v, &mut hv, exec);
        v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Dense real symmetric matrix, column-major.
    pub fn to_dense(&self, exec: Exec) -> Mat<f64> {
        let sys = self.system;
        let dim = sys.dim();
        let mut data = vec![0.0; dim * dim];
        exec.for_each_chunk(&mut data, dim, |s, col| {
            col[s] = sys.diagonal[s];
            let table = match &sys.pairs {
                Some(t) if self.g != 0.0 => t,
                _ => return,
            };
            let np = table.n_ops;
            for &(q, t, a) in table.forward(s) {
                let krow = &sys.kernel[q as usize * np..(q as usize + 1) * np];
                for &(p, r, b) in table.inverse(t as usize) {
                    col[r as usize] += self.g * a * b * krow[p as usize];
                }
            }
        });
        Mat::from_fn(dim, dim, |i, j| data[j * dim + i])
    }

    /// Full spectral factorization.
    pub fn factorize(&self, exec: Exec) -> SpectralOperator {
        let eig = linalg::eigh(&self.to_dense(exec));
        SpectralOperator { g: self.g, eig }
    }
}

/// Eigendecomposition of `H(g)`.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    g: f64,
    eig: SymEigen,
}

impl SpectralOperator {
    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn vectors(&self) -> &Mat<f64> {
        &self.eig.vectors
    }

    /// `V^T psi`.
    pub fn to_eigenbasis(&self, psi: &[Complex64], exec: Exec) -> Vec<Complex64> {
        let v = &self.eig.vectors;
        let n = self.dim();
        exec.map_range(n, |k| {
            let col = v.col(k);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                acc += psi[i] * col.read(i);
            }
            acc
        })
    }

    /// `V c`.
    pub fn from_eigenbasis(&self, c: &[Complex64], out: &mut [Complex64], exec: Exec) {
        let v = &self.eig.vectors;
        let n = self.dim();
        exec.for_each_mut(out, |i, o| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += c[k] * v.read(i, k);
            }
            *o = acc;
        });
    }

    /// `exp(-i H dt) psi`.
    pub fn propagate(&self, psi: &[Complex64], dt: f64, exec: Exec) -> Vec<Complex64> {
        let mut c = self.to_eigenbasis(psi, exec);
        for (ck, e) in c.iter_mut().zip(&self.eig.values) {
            *ck *= Complex64::from_polar(1.0, -e * dt);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.from_eigenbasis(&c, &mut out, exec);
        out
    }

    pub fn ground(&self) -> Result<(f64, ManyBodyState)> {
        let vals = &self.eig.values;
        check_gap(vals[0], vals.get(1).copied())?;
        let v = self.eig.vector(0);
        Ok((vals[0], ManyBodyState::from_real(&v, 0.0)))
    }
}

fn check_gap(e0: f64, e1: Option<f64>) -> Result<()> {
    if let Some(e1) = e1 {
        if e1 - e0 < DEGENERACY_TOL * e0.abs().max(1.0) {
            return Err(Error::DegenerateGroundState { e0, e1 });
        }
    }
    Ok(())
}

/// Ground state of `H(g)`: dense diagonalization up to [`DENSE_LIMIT`],
/// Lanczos above.
pub fn ground_state(system: &ManyBodySystem, g: f64, exec: Exec) -> Result<(f64, ManyBodyState)> {
    let op = system.operator(g);
    if system.dim() <= DENSE_LIMIT {
        op.factorize(exec).ground()
    } else {
        lanczos_ground(&op, exec)
    }
}

/// Lowest eigenpair by Lanczos with full reorthogonalization and explicit
/// restarts from the current Ritz vector.
pub fn lanczos_ground(op: &ManyBodyOperator<'_>, exec: Exec) -> Result<(f64, ManyBodyState)> {
    const MAX_KRYLOV: usize = 120;
    const MAX_RESTARTS: usize = 30;
    const TOL: f64 = 1e-11;
    let dim = op.dim();
    if dim == 1 {
        let e = op.system().one_body_diagonal()[0];
        return Ok((e, ManyBodyState::from_real(&[1.0], 0.0)));
    }
    // deterministic start with weight on every basis state
    let mut start: Vec<f64> = (0..dim)
        .map(|i| 1.0 + 0.5 * ((i as f64 * 0.7548776662466927).fract() - 0.5))
        .collect();
    normalize(&mut start);
    let mut last = (f64::NAN, f64::NAN, f64::INFINITY);
    for _ in 0..MAX_RESTARTS {
        let m_max = MAX_KRYLOV.min(dim);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut cv = vec![Complex64::new(0.0, 0.0); dim];
        let mut hv = vec![Complex64::new(0.0, 0.0); dim];
        let mut ritz = None;
        for j in 0..m_max {
            for (c, &x) in cv.iter_mut().zip(&basis[j]) {
                *c = Complex64::new(x, 0.0);
            }
            op.apply(&cv, &mut hv, exec);
            let mut w: Vec<f64> = hv.iter().map(|c| c.re).collect();
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    axpy(-c, q, &mut w);
                }
            }
            let b = norm(&w);
            let k = alpha.len();
            if k >= 2 && (k % 5 == 0 || b < 1e-13 || k == m_max) {
                let (vals, vecs) = tridiag_eigen(&alpha, &beta);
                let resid = b * vecs[(k - 1) * k].abs();
                ritz = Some((vals.clone(), vecs.clone()));
                let scale = vals[0].abs().max(1.0);
                if resid < TOL * scale || b < 1e-13 {
                    let v = combine(&basis, &vecs[..k]);
                    check_gap(vals[0], vals.get(1).copied())?;
                    return Ok((vals[0], finish(v)));
                }
                last = (vals[0], vals.get(1).copied().unwrap_or(f64::NAN), resid);
            }
            if b < 1e-13 {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        let (_, vecs) = match ritz {
            Some(r) => r,
            None => tridiag_eigen(&alpha, &beta),
        };
        let k = alpha.len();
        start = combine(&basis[..k], &vecs[..k]);
        normalize(&mut start);
    }
    Err(Error::EigenSolver(format!(
        "Lanczos ground state not converged: E0 = {}, E1 = {}, residual {:e}",
        last.0, last.1, last.2
    )))
}

fn finish(mut v: Vec<f64>) -> ManyBodyState {
    normalize(&mut v);
    ManyBodyState::from_real(&v, 0.0)
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (q, &c) in basis.iter().zip(coeffs) {
        axpy(c, q, &mut out);
    }
    out
}

/// Eigenpairs of the symmetric tridiagonal matrix; eigenvector `k` is
/// `vecs[k * n .. (k + 1) * n]`.
pub(crate) fn tridiag_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = alpha.len();
    let t = Mat::from_fn(n, n, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = linalg::eigh(&t);
    let mut vecs = Vec::with_capacity(n * n);
    for k in 0..n {
        vecs.extend(eig.vector(k));
    }
    (eig.values, vecs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let n = norm(a);
    a.iter_mut().for_each(|x| *x /= n);
}

fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}
