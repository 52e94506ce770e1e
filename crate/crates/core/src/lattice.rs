//! One-body problem on the finite lattice with hard walls.
//!
//! Lengths are in units of the inverse lattice wave vector, energies in the
//! units of the lattice depth. The lattice `V0 cos^2(x + m pi/2)` has its
//! maxima on the walls at `+-m pi/2` for every well count `m`, so the box
//! always holds exactly `m` wells of width `pi`; for odd `m` this is the
//! familiar `V0 sin^2(x)`.
//!
//! **Kinetic prefactor.** The one-body operator is
//! `-kinetic * d^2/dx^2 + V(x)`. With `hbar = M = k = 1` the physical
//! kinetic energy `p^2/2M` gives `kinetic = 1/2`, which is the default
//! ([`DEFAULT_KINETIC`]). Setting `kinetic = 1` measures energies in recoil
//! units of `hbar^2 k^2 / 2M` instead. The two conventions produce very
//! different tunneling rates at the same `V0`, so this constant is part of
//! every configuration and checkpoint.
//!
//! The discretization is a sine discrete variable representation (DVR) on
//! `n_points` interior points; wavefunctions vanish on both walls.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::sine::SineTransform;

/// Kinetic prefactor for `hbar = M = k = 1`.
pub const DEFAULT_KINETIC: f64 = 0.5;

/// Minimum number of grid points per well.
pub const POINTS_PER_WELL: usize = 30;

/// Minimum ratio between the smallest band gap and the largest spread
/// between neighbouring levels inside a band.
pub const BAND_GAP_RATIO: f64 = 2.0;

/// Discretized finite lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    wells: usize,
    n_points: usize,
    depth: f64,
    kinetic: f64,
}

impl GridSpec {
    /// Builds the grid with the default kinetic prefactor.
    pub fn new(wells: usize, n_points: usize, depth: f64) -> Result<Self> {
        Self::with_kinetic(wells, n_points, depth, DEFAULT_KINETIC)
    }

    pub fn with_kinetic(wells: usize, n_points: usize, depth: f64, kinetic: f64) -> Result<Self> {
        if wells == 0 {
            return Err(invalid("wells", "must be at least 1"));
        }
        if n_points == 0 {
            return Err(invalid("n_points", "must be positive"));
        }
        if n_points < POINTS_PER_WELL * wells {
            return Err(invalid(
                "n_points",
                format!(
                    "{n_points} is below the resolution floor of {} points for {wells} wells",
                    POINTS_PER_WELL * wells
                ),
            ));
        }
        if !(depth >= 0.0) || !depth.is_finite() {
            return Err(invalid("depth", format!("must be finite and >= 0, got {depth}")));
        }
        if !(kinetic > 0.0) || !kinetic.is_finite() {
            return Err(invalid("kinetic", format!("must be finite and > 0, got {kinetic}")));
        }
        Ok(Self {
            wells,
            n_points,
            depth,
            kinetic,
        })
    }

    pub fn wells(&self) -> usize {
        self.wells
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn kinetic(&self) -> f64 {
        self.kinetic
    }

    /// Position of the right wall, `m pi / 2`.
    pub fn half_width(&self) -> f64 {
        self.wells as f64 * PI / 2.0
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_width()
    }

    pub fn extent(&self) -> (f64, f64) {
        (-self.half_width(), self.half_width())
    }

    /// Grid spacing `h`; also the quadrature weight.
    pub fn spacing(&self) -> f64 {
        self.length() / (self.n_points + 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..=self.n_points)
            .map(|i| -self.half_width() + i as f64 * h)
            .collect()
    }

    pub fn potential_at(&self, x: f64) -> f64 {
        let c = (x + self.half_width()).cos();
        self.depth * c * c
    }

    pub fn potential(&self) -> Vec<f64> {
        self.points().into_iter().map(|x| self.potential_at(x)).collect()
    }

    /// Lattice minima, left to right.
    pub fn well_minima(&self) -> Vec<f64> {
        (0..self.wells)
            .map(|i| -self.half_width() + (i as f64 + 0.5) * PI)
            .collect()
    }

    /// Well boundaries: lattice maxima including both walls (`m + 1` values).
    pub fn well_boundaries(&self) -> Vec<f64> {
        (0..=self.wells)
            .map(|i| -self.half_width() + i as f64 * PI)
            .collect()
    }

    /// Interval of well `i` (0-based, left to right).
    pub fn well_window(&self, i: usize) -> (f64, f64) {
        let b = self.well_boundaries();
        (b[i], b[i + 1])
    }

    /// Window of the central well; only defined for odd well counts.
    pub fn middle_window(&self) -> Result<(f64, f64)> {
        if self.wells % 2 == 0 {
            return Err(invalid("wells", "no central well for an even well count"));
        }
        Ok(self.well_window(self.wells / 2))
    }

    /// Kinetic eigenvalue of sine mode `j` (1-based).
    pub(crate) fn mode_energy(&self, j: usize) -> f64 {
        let kj = j as f64 * PI / self.length();
        self.kinetic * kj * kj
    }

    /// Dense DVR Hamiltonian (row-major).
    pub fn hamiltonian(&self) -> Vec<f64> {
        let n = self.n_points;
        let s = SineTransform::dense(n);
        let lam: Vec<f64> = (1..=n).map(|j| self.mode_energy(j)).collect();
        let sm = Mat::from_fn(n, n, |i, j| s[i * n + j]);
        let sl = Mat::from_fn(n, n, |i, j| s[i * n + j] * lam[j]);
        let t = &sl * &sm;
        let v = self.potential();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = t.read(i, j);
            }
            h[i * n + i] += v[i];
        }
        h
    }
}

/// Band label and rank of an orbital within its band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandSlot {
    pub band: usize,
    pub rank: usize,
}

/// Lowest eigenpairs of the one-body Hamiltonian.
#[derive(Debug, Clone)]
pub struct SinglePartBasis {
    grid: GridSpec,
    energies: Vec<f64>,
    /// Orbital values on the grid, `orbitals[a][i] = phi_a(x_i)`.
    orbitals: Vec<Vec<f64>>,
    /// Sine-mode coefficients of each orbital (unit-normalized).
    sine_coeffs: Vec<Vec<f64>>,
    slots: Vec<BandSlot>,
    /// First level above the truncation, for band-gap checks.
    next_level: f64,
}

impl SinglePartBasis {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n_orb(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn orbital(&self, a: usize) -> &[f64] {
        &self.orbitals[a]
    }

    pub fn orbitals(&self) -> &[Vec<f64>] {
        &self.orbitals
    }

    pub fn slot(&self, a: usize) -> BandSlot {
        self.slots[a]
    }

    pub fn slots(&self) -> &[BandSlot] {
        &self.slots
    }

    pub fn n_bands(&self) -> usize {
        self.n_orb() / self.grid.wells()
    }

    /// Orbital indices belonging to `band`.
    pub fn band_members(&self, band: usize) -> Vec<usize> {
        (0..self.n_orb())
            .filter(|&a| self.slots[a].band == band)
            .collect()
    }

    /// Gram matrix under the grid quadrature (row-major).
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n_orb();
        let h = self.grid.spacing();
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = h * dot(&self.orbitals[a], &self.orbitals[b]);
            }
        }
        g
    }

    /// Exact moments `int_{x1}^{x2} x^p phi_a phi_b dx` for `p = 0, 1, 2`,
    /// each a row-major `n_orb x n_orb` matrix.
    pub fn region_moments(&self, x1: f64, x2: f64) -> [Vec<f64>; 3] {
        let n = self.n_orb();
        let sine = sine_moment_matrices(&self.grid, x1, x2);
        let np = self.grid.n_points();
        let mut out = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
        for (p, m) in sine.iter().enumerate() {
            // tmp = M * C^T, then out = C * tmp
            let proj: Vec<Vec<f64>> = (0..n)
                .map(|b| {
                    (0..np)
                        .map(|j| dot(&m[j * np..(j + 1) * np], &self.sine_coeffs[b]))
                        .collect()
                })
                .collect();
            for a in 0..n {
                for b in 0..n {
                    out[p][a * n + b] = dot(&self.sine_coeffs[a], &proj[b]);
                }
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves for the lowest `n_orb` eigenpairs and groups them into bands of
/// `m` orbitals separated by the largest spectral gaps.
pub fn solve_one_body(grid: &GridSpec, n_orb: usize) -> Result<SinglePartBasis> {
    solve(grid, n_orb, true)
}

/// Lowest `n_orb` eigenpairs without requiring every group of `m` levels
/// to be a separated band. Truncations that reach above the barriers (the
/// triple well at `n_orb = 12`) need this; [`build_wannier`] still checks
/// the bands it localizes.
pub fn solve_lowest(grid: &GridSpec, n_orb: usize) -> Result<SinglePartBasis> {
    solve(grid, n_orb, false)
}

fn solve(grid: &GridSpec, n_orb: usize, banded: bool) -> Result<SinglePartBasis> {
    let n = grid.n_points();
    let m = grid.wells();
    if n_orb == 0 {
        return Err(invalid("n_orb", "must be positive"));
    }
    if n_orb >= n {
        return Err(invalid("n_orb", format!("{n_orb} must be below n_points = {n}")));
    }
    if n_orb % m != 0 {
        return Err(invalid(
            "n_orb",
            format!("{n_orb} is not a whole number of bands of {m} orbitals"),
        ));
    }
    let h = grid.spacing();
    let evd = linalg::eigh_row_major(n, &grid.hamiltonian());
    let energies = evd.values[..n_orb].to_vec();
    let slots = if banded {
        group_bands(&evd.values[..=n_orb], m)?
    } else {
        nominal_slots(n_orb, m)
    };

    let s = SineTransform::dense(n);
    let mut orbitals = Vec::with_capacity(n_orb);
    let mut sine_coeffs = Vec::with_capacity(n_orb);
    for a in 0..n_orb {
        let mut u = evd.vector(a);
        fix_sign(&mut u);
        let coeffs: Vec<f64> = (0..n).map(|j| dot(&s[j * n..(j + 1) * n], &u)).collect();
        orbitals.push(u.iter().map(|v| v / h.sqrt()).collect());
        sine_coeffs.push(coeffs);
    }
    Ok(SinglePartBasis {
        grid: grid.clone(),
        energies,
        orbitals,
        sine_coeffs,
        slots,
        next_level: evd.values[n_orb],
    })
}

/// Sign of the extremum of largest magnitude (first one on ties).
fn extremum_sign(v: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for &x in v {
        if x.abs() > best.abs() + 1e-12 {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Makes the extremum of largest magnitude positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    if extremum_sign(v) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn nominal_slots(n_orb: usize, m: usize) -> Vec<BandSlot> {
    (0..n_orb)
        .map(|a| BandSlot {
            band: a / m,
            rank: a % m,
        })
        .collect()
}

/// Assigns band slots given `n_orb + 1` ascending levels.
fn group_bands(levels: &[f64], m: usize) -> Result<Vec<BandSlot>> {
    let n_orb = levels.len() - 1;
    let slots = nominal_slots(n_orb, m);
    if m == 1 {
        return Ok(slots);
    }
    let gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let n_bands = n_orb / m;
    // The n_bands largest gaps must sit exactly after every m-th level.
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&a, &b| gaps[b].total_cmp(&gaps[a]));
    let mut largest: Vec<usize> = order[..n_bands].to_vec();
    largest.sort_unstable();
    let expected: Vec<usize> = (1..=n_bands).map(|b| b * m - 1).collect();
    let boundary_min = expected
        .iter()
        .map(|&i| gaps[i])
        .fold(f64::INFINITY, f64::min);
    let intra_max = (0..gaps.len())
        .filter(|i| (i + 1) % m != 0)
        .map(|i| gaps[i])
        .fold(0.0, f64::max);
    if largest != expected || boundary_min < BAND_GAP_RATIO * intra_max {
        return Err(Error::BandSeparation(format!(
            "smallest band gap {boundary_min:.4e} vs largest intra-band spacing {intra_max:.4e} \
             (ratio threshold {BAND_GAP_RATIO})"
        )));
    }
    Ok(slots)
}

/// Localized functions per band and well.
#[derive(Debug, Clone)]
pub struct WannierSet {
    wells: usize,
    n_bands: usize,
    /// `transform[a * n_w + w] = <phi_a | w>`; block diagonal by band.
    transform: Vec<f64>,
    n_orb: usize,
    functions: Vec<Vec<f64>>,
    centers: Vec<f64>,
}

impl WannierSet {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn wells(&self) -> usize {
        self.wells
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    /// Index of the function for `(band, well)`.
    pub fn index(&self, band: usize, well: usize) -> usize {
        band * self.wells + well
    }

    pub fn band_of(&self, w: usize) -> usize {
        w / self.wells
    }

    pub fn well_of(&self, w: usize) -> usize {
        w % self.wells
    }

    pub fn function(&self, w: usize) -> &[f64] {
        &self.functions[w]
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Overlap `<phi_a | w>` with eigen-orbital `a`.
    pub fn overlap(&self, a: usize, w: usize) -> f64 {
        self.transform[a * self.len() + w]
    }

    /// Orthogonal `m x m` block of band `band`: `block[r * m + i]` is the
    /// coefficient of band orbital of rank `r` in the Wannier function of
    /// well `i`.
    pub fn band_block(&self, basis: &SinglePartBasis, band: usize) -> Vec<f64> {
        let members = basis.band_members(band);
        let m = self.wells;
        let mut block = vec![0.0; m * m];
        for (r, &a) in members.iter().enumerate() {
            for i in 0..m {
                block[r * m + i] = self.overlap(a, self.index(band, i));
            }
        }
        block
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    /// Fraction of each function's norm inside its home well.
    pub fn home_well_fractions(&self, basis: &SinglePartBasis) -> Vec<f64> {
        let n = basis.n_orb();
        (0..self.len())
            .map(|w| {
                let (x1, x2) = basis.grid().well_window(self.well_of(w));
                let m0 = &basis.region_moments(x1, x2)[0];
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc += self.overlap(a, w) * m0[a * n + b] * self.overlap(b, w);
                    }
                }
                acc
            })
            .collect()
    }
}

/// Diagonalizes the band-projected position operator in each of the lowest
/// `n_bands` bands.
pub fn build_wannier(basis: &SinglePartBasis, n_bands: usize) -> Result<WannierSet> {
    let m = basis.grid().wells();
    if n_bands == 0 || n_bands > basis.n_bands() {
        return Err(invalid(
            "n_bands",
            format!("{n_bands} requested, basis holds {}", basis.n_bands()),
        ));
    }
    let n_orb = basis.n_orb();
    let n_w = m * n_bands;
    let mut levels = basis.energies.clone();
    levels.push(basis.next_level);
    group_bands(&levels[..=n_w], m)?;
    let h = basis.grid().spacing();
    let x = basis.grid().points();
    let mut transform = vec![0.0; n_orb * n_w];
    let mut functions = vec![Vec::new(); n_w];
    let mut centers = vec![0.0; n_w];
    for band in 0..n_bands {
        let members = basis.band_members(band);
        let mut pos = vec![0.0; m * m];
        for (r, &a) in members.iter().enumerate() {
            for (s, &b) in members.iter().enumerate() {
                let pa = basis.orbital(a);
                let pb = basis.orbital(b);
                pos[r * m + s] = h * (0..x.len()).map(|i| pa[i] * x[i] * pb[i]).sum::<f64>();
            }
        }
        let evd = linalg::eigh_row_major(m, &pos);
        for k in 1..m {
            let d = evd.values[k] - evd.values[k - 1];
            if d < 1e-6 {
                return Err(Error::DegenerateCenters {
                    band,
                    detail: format!("centers {} and {} differ by {d:.3e}", k - 1, k),
                });
            }
        }
        for i in 0..m {
            let mut c = evd.vector(i);
            let mut f: Vec<f64> = vec![0.0; x.len()];
            for (r, &a) in members.iter().enumerate() {
                for (fi, pa) in f.iter_mut().zip(basis.orbital(a)) {
                    *fi += c[r] * pa;
                }
            }
            if extremum_sign(&f) < 0.0 {
                f.iter_mut().for_each(|v| *v = -*v);
                c.iter_mut().for_each(|v| *v = -*v);
            }
            let w = band * m + i;
            for (r, &a) in members.iter().enumerate() {
                transform[a * n_w + w] = c[r];
            }
            centers[w] = evd.values[i];
            functions[w] = f;
        }
    }
    Ok(WannierSet {
        wells: m,
        n_bands,
        transform,
        n_orb,
        functions,
        centers,
    })
}

/// `[M_0, M_1, M_2]` with `M_p[j][k] = int_{x1}^{x2} x^p chi_j chi_k dx` for
/// the normalized sine modes `chi_j` of the box (row-major `n x n`).
fn sine_moment_matrices(grid: &GridSpec, x1: f64, x2: f64) -> [Vec<f64>; 3] {
    let n = grid.n_points();
    let l = grid.length();
    let c = grid.half_width();
    let (x1, x2) = (x1.max(-c), x2.min(c));
    let (u1, u2) = (x1 + c, x2 + c);
    let alpha = PI / l;
    // cosine integrals for every frequency index q = 0..=2n
    let ints: Vec<[f64; 3]> = (0..=2 * n)
        .map(|q| cos_moments(q as f64 * alpha, u1, u2))
        .collect();
    let mut out = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
    if !(u2 > u1) {
        return out;
    }
    for j in 1..=n {
        for k in j..=n {
            let d = &ints[k - j];
            let s = &ints[j + k];
            // u^p integrals of chi_j chi_k = (1/L) [cos((j-k)au) - cos((j+k)au)]
            let u0 = (d[0] - s[0]) / l;
            let u1m = (d[1] - s[1]) / l;
            let u2m = (d[2] - s[2]) / l;
            // x = u - c
            let m0 = u0;
            let m1 = u1m - c * u0;
            let m2 = u2m - 2.0 * c * u1m + c * c * u0;
            for (p, v) in [m0, m1, m2].into_iter().enumerate() {
                out[p][(j - 1) * n + (k - 1)] = v;
                out[p][(k - 1) * n + (j - 1)] = v;
            }
        }
    }
    out
}

/// `int_{u1}^{u2} u^p cos(beta u) du` for `p = 0, 1, 2`.
fn cos_moments(beta: f64, u1: f64, u2: f64) -> [f64; 3] {
    if beta == 0.0 {
        return [
            u2 - u1,
            (u2 * u2 - u1 * u1) / 2.0,
            (u2 * u2 * u2 - u1 * u1 * u1) / 3.0,
        ];
    }
    let anti = |u: f64| {
        let (s, co) = (beta * u).sin_cos();
        let b2 = beta * beta;
        [
            s / beta,
            u * s / beta + co / b2,
            u * u * s / beta + 2.0 * u * co / b2 - 2.0 * s / (b2 * beta),
        ]
    };
    let (a, b) = (anti(u1), anti(u2));
    [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
}
