//! Time-resolved observables evaluated on many-body states.
//!
//! Every probe precomputes what depends only on the basis (lowering
//! tables, Fourier factors of the orbitals, region moments, Wannier
//! overlaps) so that a single sample costs little more than reading the
//! state once.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{FockBasis, LoweringTable};
use crate::lattice::{SinglePartBasis, WannierSet};
use crate::linalg;
use crate::state::ManyBodyState;

/// Captured Wannier weight below which a projection is flagged.
pub const CAPTURE_WARNING: f64 = 0.95;

/// `|<psi0|psi(t)>|^2` for every sample.
pub fn fidelity_series(psi0: &ManyBodyState, states: &[ManyBodyState]) -> Vec<f64> {
    states.iter().map(|s| psi0.fidelity(s).min(1.0)).collect()
}

/// One-body density matrix in the orbital basis,
/// `D_ab = <a_a^+ a_b> / N`, trace one.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyDensity {
    n_orb: usize,
    /// Row-major `D_ab`.
    data: Vec<Complex64>,
}

impl OneBodyDensity {
    pub fn from_matrix(n_orb: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n_orb * n_orb);
        Self { n_orb, data }
    }

    /// Pure single-particle state with orbital coefficients `c`.
    pub fn pure(c: &[Complex64]) -> Self {
        let n = c.len();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                data[a * n + b] = c[a].conj() * c[b];
            }
        }
        Self { n_orb: n, data }
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.data[a * self.n_orb + b]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n_orb).map(|a| self.get(a, a).re).sum()
    }

    /// Natural occupations (eigenvalues), ascending.
    pub fn natural_occupations(&self) -> Vec<f64> {
        let re: Vec<f64> = self.data.iter().map(|c| c.re).collect();
        let im: Vec<f64> = self.data.iter().map(|c| c.im).collect();
        linalg::hermitian_eigenvalues(self.n_orb, &re, &im)
    }

    /// `rho_1(x_i, x_j) = sum_ab D_ab phi_a(x_i) phi_b(x_j)` on the grid,
    /// row-major. Trace under the grid quadrature is one.
    pub fn on_grid(&self, basis: &SinglePartBasis) -> Vec<Complex64> {
        let np = basis.grid().n_points();
        let n = self.n_orb;
        // t[a][j] = sum_b D_ab phi_b(x_j)
        let t: Vec<Vec<Complex64>> = (0..n)
            .map(|a| {
                (0..np)
                    .map(|j| (0..n).map(|b| self.get(a, b) * basis.orbital(b)[j]).sum())
                    .collect()
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); np * np];
        for i in 0..np {
            for a in 0..n {
                let pa = basis.orbital(a)[i];
                for j in 0..np {
                    out[i * np + j] += pa * t[a][j];
                }
            }
        }
        out
    }

    /// `sum_ab Re(D_ab) M_ab` for a real symmetric matrix `M`.
    fn contract(&self, m: &[f64]) -> f64 {
        self.data.iter().zip(m).map(|(d, x)| d.re * x).sum()
    }
}

/// Evaluates the one-body density matrix through the single-lowering table.
#[derive(Debug, Clone)]
pub struct DensityProbe {
    particles: usize,
    n_orb: usize,
    table: LoweringTable,
}

impl DensityProbe {
    pub fn new(fock: &FockBasis) -> Self {
        let (_, table) = fock.single_lowering();
        Self {
            particles: fock.particles(),
            n_orb: fock.n_orb(),
            table,
        }
    }

    pub fn density(&self, state: &ManyBodyState) -> OneBodyDensity {
        let n = self.n_orb;
        let psi = state.coeffs();
        let mut d = vec![Complex64::new(0.0, 0.0); n * n];
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        let mut touched: Vec<usize> = Vec::with_capacity(n);
        for t in 0..self.table.target_dim {
            touched.clear();
            for &(b, s, amp) in self.table.inverse(t) {
                let b = b as usize;
                if !touched.contains(&b) {
                    touched.push(b);
                }
                u[b] += psi[s as usize] * amp;
            }
            for &a in &touched {
                let ua = u[a].conj();
                for &b in &touched {
                    d[a * n + b] += ua * u[b];
                }
            }
            for &a in &touched {
                u[a] = Complex64::new(0.0, 0.0);
            }
        }
        let inv = 1.0 / self.particles as f64;
        d.iter_mut().for_each(|x| *x *= inv);
        OneBodyDensity { n_orb: n, data: d }
    }
}

/// Momentum grid covering `[-k_max, k_max]` with `count` points.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub k: Vec<f64>,
}

impl MomentumGrid {
    pub fn symmetric(k_max: f64, count: usize) -> Result<Self> {
        if !(k_max > 0.0) || count < 3 || count % 2 == 0 {
            return Err(invalid("momentum grid", "need k_max > 0 and an odd count >= 3"));
        }
        let dk = 2.0 * k_max / (count - 1) as f64;
        let half = (count / 2) as i64;
        Ok(Self {
            k: (-half..=half).map(|i| i as f64 * dk).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// `n(k) = (1/2 pi) sum_ab D_ab F_a(k) F_b(k)^*` with
/// `F_a(k) = int phi_a(x) e^{-ikx} dx` evaluated by the grid quadrature.
///
/// The quadrature grid has `2 n_points + 1` momenta spanning one Brillouin
/// zone of the spatial grid, where the discrete Parseval identity makes
/// `sum_k n(k) dk` equal to the trace of `D` exactly.
#[derive(Debug, Clone)]
pub struct MomentumProbe {
    n_orb: usize,
    grid: MomentumGrid,
    /// `factors[k * n_orb + a] = F_a(k)^*`.
    factors: Vec<Complex64>,
    quad_factors: Vec<Complex64>,
    quad_dk: f64,
    zero: Vec<Complex64>,
}

impl MomentumProbe {
    pub fn new(basis: &SinglePartBasis, grid: MomentumGrid) -> Self {
        let np = basis.grid().n_points();
        let h = basis.grid().spacing();
        let quad_count = 2 * np + 1;
        let quad_dk = 2.0 * PI / (quad_count as f64 * h);
        let half = (quad_count / 2) as i64;
        let quad_k: Vec<f64> = (-half..=half).map(|i| i as f64 * quad_dk).collect();
        let factors = fourier_factors(basis, &grid.k);
        let quad_factors = fourier_factors(basis, &quad_k);
        let zero = fourier_factors(basis, &[0.0]);
        Self {
            n_orb: basis.n_orb(),
            grid,
            factors,
            quad_factors,
            quad_dk,
            zero,
        }
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn distribution(&self, d: &OneBodyDensity) -> Vec<f64> {
        evaluate(d, &self.factors, self.n_orb)
    }

    /// `n(0)`.
    pub fn at_zero(&self, d: &OneBodyDensity) -> f64 {
        evaluate(d, &self.zero, self.n_orb)[0]
    }

    /// `int n(k) dk` by the exact quadrature.
    pub fn integral(&self, d: &OneBodyDensity) -> f64 {
        evaluate(d, &self.quad_factors, self.n_orb).iter().sum::<f64>() * self.quad_dk
    }
}

fn fourier_factors(basis: &SinglePartBasis, ks: &[f64]) -> Vec<Complex64> {
    let n = basis.n_orb();
    let h = basis.grid().spacing();
    let x = basis.grid().points();
    let mut out = vec![Complex64::new(0.0, 0.0); ks.len() * n];
    for (ik, &k) in ks.iter().enumerate() {
        let phases: Vec<Complex64> = x.iter().map(|&xi| Complex64::from_polar(h, k * xi)).collect();
        for a in 0..n {
            // conj(F_a) = h sum_i phi_a(x_i) e^{+ikx_i}
            out[ik * n + a] = basis
                .orbital(a)
                .iter()
                .zip(&phases)
                .map(|(p, e)| e * p)
                .sum();
        }
    }
    out
}

fn evaluate(d: &OneBodyDensity, factors: &[Complex64], n: usize) -> Vec<f64> {
    factors
        .chunks(n)
        .map(|f| {
            // f holds conj(F); n(k) = f^+ D f / 2 pi
            let mut acc = 0.0;
            for a in 0..n {
                let mut row = Complex64::new(0.0, 0.0);
                for b in 0..n {
                    row += d.get(a, b) * f[b];
                }
                acc += (f[a].conj() * row).re;
            }
            acc / (2.0 * PI)
        })
        .collect()
}

/// Windowed density integrals for the cradle and breathing observables.
#[derive(Debug, Clone)]
pub struct RegionProbe {
    particles: usize,
    /// `[left half, right half]` zeroth moments of the outer-left well.
    left: [Vec<f64>; 2],
    right: [Vec<f64>; 2],
    middle: Option<[Vec<f64>; 3]>,
    middle_window: Option<(f64, f64)>,
}

impl RegionProbe {
    pub fn new(basis: &SinglePartBasis, particles: usize) -> Self {
        let grid = basis.grid();
        let m = grid.wells();
        let halves = |well: usize| {
            let (a, b) = grid.well_window(well);
            let mid = 0.5 * (a + b);
            [
                basis.region_moments(a, mid)[0].clone(),
                basis.region_moments(mid, b)[0].clone(),
            ]
        };
        let middle_window = grid.middle_window().ok();
        let middle = middle_window.map(|(a, b)| basis.region_moments(a, b));
        Self {
            particles,
            left: halves(0),
            right: halves(m - 1),
            middle,
            middle_window,
        }
    }

    /// `(Delta rho_L, Delta rho_R)`: density in the left half minus the
    /// right half of the outermost left and right wells, with the density
    /// normalized to `N`.
    pub fn asymmetry(&self, d: &OneBodyDensity) -> (f64, f64) {
        let n = self.particles as f64;
        let l = n * (d.contract(&self.left[0]) - d.contract(&self.left[1]));
        let r = n * (d.contract(&self.right[0]) - d.contract(&self.right[1]));
        (l, r)
    }

    /// `sigma^2_M = M2 - M1^2 / M0` over the middle well.
    pub fn breathing(&self, d: &OneBodyDensity) -> Result<f64> {
        let (mom, (a, b)) = match (&self.middle, self.middle_window) {
            (Some(m), Some(w)) => (m, w),
            _ => return Err(invalid("wells", "breathing moment needs an odd well count")),
        };
        let n = self.particles as f64;
        let m0 = n * d.contract(&mom[0]);
        let m1 = n * d.contract(&mom[1]);
        let m2 = n * d.contract(&mom[2]);
        if !(m0 > 1e-12) {
            return Err(Error::EmptyWindow(a, b));
        }
        Ok((m2 - m1 * m1 / m0).max(0.0))
    }

    /// Windowed density `int_window rho` of the middle well.
    pub fn middle_population(&self, d: &OneBodyDensity) -> Option<f64> {
        self.middle
            .as_ref()
            .map(|m| self.particles as f64 * d.contract(&m[0]))
    }
}

/// Energetic class of a four-boson triple-well spatial pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumberStateClass {
    /// `{2,1,1}`
    SinglePairs,
    /// `{2,2,0}`
    DoublePairs,
    /// `{3,1,0}`
    Triples,
    /// `{4,0,0}`
    Quadruples,
    Other,
}

impl NumberStateClass {
    pub fn label(self) -> &'static str {
        match self {
            NumberStateClass::SinglePairs => "SP",
            NumberStateClass::DoublePairs => "DP",
            NumberStateClass::Triples => "T",
            NumberStateClass::Quadruples => "Q",
            NumberStateClass::Other => "-",
        }
    }

    /// Classifies a sorted (descending) spatial occupation pattern.
    pub fn from_pattern(pattern: &[u8]) -> Self {
        match pattern {
            [2, 1, 1] => NumberStateClass::SinglePairs,
            [2, 2, 0] => NumberStateClass::DoublePairs,
            [3, 1, 0] => NumberStateClass::Triples,
            [4, 0, 0] => NumberStateClass::Quadruples,
            _ => NumberStateClass::Other,
        }
    }
}

/// Coefficients `C_n` of a state in the multiband Wannier number basis.
///
/// `coeffs` is indexed like the dynamical Fock basis, with orbital slot
/// `band * m + well` read as the Wannier function of that band and well.
#[derive(Debug, Clone)]
pub struct NumberStateProjection {
    pub coeffs: Vec<Complex64>,
    pub captured: f64,
    /// `band_counts[s * n_bands + band]` for Fock state `s`.
    band_counts: Vec<u8>,
    n_bands: usize,
    particles: usize,
}

impl NumberStateProjection {
    pub fn weight(&self, s: usize) -> f64 {
        self.coeffs[s].norm_sqr()
    }

    pub fn warn_if_incomplete(&self) -> bool {
        self.captured < CAPTURE_WARNING
    }

    /// `P_{N0}^{(band)}`: probability of exactly `n0` bosons in `band`.
    pub fn band_occupation(&self, n0: usize, band: usize) -> Result<f64> {
        if n0 > self.particles {
            return Err(invalid("n0", format!("{n0} exceeds N = {}", self.particles)));
        }
        if band >= self.n_bands {
            return Err(invalid("band", format!("{band} >= {} bands", self.n_bands)));
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(s, _)| self.band_counts[s * self.n_bands + band] as usize == n0)
            .map(|(_, c)| c.norm_sqr())
            .sum())
    }

    /// `P_N^{(0)}`: all bosons in the lowest band.
    pub fn ground_band(&self) -> f64 {
        self.band_occupation(self.particles, 0).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
struct SignatureBlock {
    /// Bosons per band.
    counts: Vec<usize>,
    /// Global Fock index of each block position (band 0 most significant).
    global: Vec<u32>,
    covered: bool,
}

/// Projects many-body states onto Wannier number states.
///
/// The eigen-orbital to Wannier change of basis is block diagonal by band,
/// so number states only mix within a fixed band-count signature, and there
/// the overlap matrix is the Kronecker product of per-band permanent
/// matrices. Projection applies those factors one band at a time.
#[derive(Debug, Clone)]
pub struct WannierProjector {
    particles: usize,
    wells: usize,
    n_bands: usize,
    wannier_bands: usize,
    blocks: Vec<SignatureBlock>,
    /// `band_mats[band][k]`: row-major overlap matrix between Wannier and
    /// eigen-orbital patterns of `k` bosons in that band.
    band_mats: Vec<Vec<Vec<f64>>>,
    local_dims: Vec<usize>,
    band_counts: Vec<u8>,
    spatial: Vec<Vec<u8>>,
    members: Vec<Vec<usize>>,
    fock: FockBasis,
}

impl WannierProjector {
    pub fn new(fock: &FockBasis, basis: &SinglePartBasis, wannier: &WannierSet) -> Result<Self> {
        let m = basis.grid().wells();
        let n_orb = basis.n_orb();
        if fock.n_orb() != n_orb {
            return Err(Error::DimensionMismatch(format!(
                "Fock basis over {} orbitals, one-body basis has {n_orb}",
                fock.n_orb()
            )));
        }
        if wannier.wells() != m || wannier.n_orb() != n_orb {
            return Err(Error::DimensionMismatch("Wannier set built on another basis".into()));
        }
        let n_bands = basis.n_bands();
        let particles = fock.particles();
        let locals: Vec<FockBasis> = (0..=particles).map(|k| local_basis(k, m)).collect();
        let local_dims: Vec<usize> = locals.iter().map(|b| b.len()).collect();

        let mut band_mats = Vec::with_capacity(wannier.n_bands());
        for band in 0..wannier.n_bands() {
            let block = wannier.band_block(basis, band);
            let mats = locals
                .iter()
                .map(|lb| permanent_matrix(lb, &block, m))
                .collect();
            band_mats.push(mats);
        }

        // band-local occupation of every global state
        let members: Vec<Vec<usize>> = (0..n_bands).map(|b| basis.band_members(b)).collect();
        let mut band_counts = Vec::with_capacity(fock.len() * n_bands);
        let mut spatial = Vec::with_capacity(fock.len());
        let mut by_signature: std::collections::BTreeMap<Vec<usize>, Vec<(usize, u32)>> =
            std::collections::BTreeMap::new();
        let mut local = vec![0u8; m];
        for (s, occ) in fock.states().enumerate() {
            let mut counts = Vec::with_capacity(n_bands);
            let mut position = 0usize;
            let mut pattern = vec![0u8; m];
            for mem in &members {
                for (r, &a) in mem.iter().enumerate() {
                    local[r] = occ[a];
                    pattern[r] += occ[a];
                }
                let k: usize = local.iter().map(|&x| x as usize).sum();
                counts.push(k);
                band_counts.push(k as u8);
                let li = locals[k].index_of(&local).expect("local pattern");
                position = position * local_dims[k] + li;
            }
            pattern.sort_unstable_by(|a, b| b.cmp(a));
            spatial.push(pattern);
            by_signature.entry(counts).or_default().push((position, s as u32));
        }
        let blocks = by_signature
            .into_iter()
            .map(|(counts, mut entries)| {
                entries.sort_unstable();
                let covered = counts
                    .iter()
                    .enumerate()
                    .all(|(b, &k)| k == 0 || b < wannier.n_bands());
                SignatureBlock {
                    counts,
                    global: entries.into_iter().map(|(_, s)| s).collect(),
                    covered,
                }
            })
            .collect();
        Ok(Self {
            particles,
            wells: m,
            n_bands,
            wannier_bands: wannier.n_bands(),
            blocks,
            band_mats,
            local_dims,
            band_counts,
            spatial,
            members,
            fock: fock.clone(),
        })
    }

    /// Slot of the Wannier number state with `occ[band * m + well]` bosons
    /// in each Wannier function (missing trailing bands count as empty).
    pub fn wannier_index(&self, occ: &[u8]) -> Option<usize> {
        let m = self.wells;
        let mut slots = vec![0u8; self.fock.n_orb()];
        for (w, &n) in occ.iter().enumerate() {
            let (band, well) = (w / m, w % m);
            if band >= self.n_bands {
                return None;
            }
            slots[self.members[band][well]] = n;
        }
        self.fock.index_of(&slots)
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn wells(&self) -> usize {
        self.wells
    }

    /// Spatial (band-summed) occupation of Fock slot `s`, sorted descending.
    pub fn spatial_pattern(&self, s: usize) -> &[u8] {
        &self.spatial[s]
    }

    pub fn class_of(&self, s: usize) -> NumberStateClass {
        NumberStateClass::from_pattern(&self.spatial[s])
    }

    pub fn project(&self, state: &ManyBodyState) -> NumberStateProjection {
        let psi = state.coeffs();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); psi.len()];
        for block in self.blocks.iter().filter(|b| b.covered) {
            let mut data: Vec<Complex64> = block.global.iter().map(|&s| psi[s as usize]).collect();
            let dims: Vec<usize> = block.counts.iter().map(|&k| self.local_dims[k]).collect();
            for (band, &k) in block.counts.iter().enumerate() {
                if k == 0 || band >= self.wannier_bands {
                    continue;
                }
                mode_product(&mut data, &dims, band, &self.band_mats[band][k]);
            }
            for (&s, c) in block.global.iter().zip(data) {
                coeffs[s as usize] = c;
            }
        }
        let captured = coeffs.iter().map(|c| c.norm_sqr()).sum();
        NumberStateProjection {
            coeffs,
            captured,
            band_counts: self.band_counts.clone(),
            n_bands: self.n_bands,
            particles: self.particles,
        }
    }

    /// `P_{N0}^{(band)}` straight from eigen-orbital coefficients; band
    /// counts are unchanged by the within-band rotation to Wannier functions.
    pub fn band_occupation_direct(&self, state: &ManyBodyState, n0: usize, band: usize) -> f64 {
        state
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(s, _)| self.band_counts[s * self.n_bands + band] as usize == n0)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// Total weight per class.
    pub fn class_weights(&self, proj: &NumberStateProjection) -> Vec<(NumberStateClass, f64)> {
        let classes = [
            NumberStateClass::SinglePairs,
            NumberStateClass::DoublePairs,
            NumberStateClass::Triples,
            NumberStateClass::Quadruples,
            NumberStateClass::Other,
        ];
        classes
            .iter()
            .map(|&c| {
                let w = (0..proj.coeffs.len())
                    .filter(|&s| self.class_of(s) == c)
                    .map(|s| proj.weight(s))
                    .sum();
                (c, w)
            })
            .collect()
    }
}

fn local_basis(k: usize, m: usize) -> FockBasis {
    // k = 0 yields the single empty pattern
    FockBasis::build(k, m)
}

/// `M[w, e] = <w-pattern | e-pattern>` for `k` bosons in one band, where
/// `block[r * m + i] = <phi_r | w_i>`.
fn permanent_matrix(lb: &FockBasis, block: &[f64], m: usize) -> Vec<f64> {
    let d = lb.len();
    let k = lb.particles();
    let mut out = vec![0.0; d * d];
    if k == 0 {
        out[0] = 1.0;
        return out;
    }
    let expand = |occ: &[u8]| -> Vec<usize> {
        let mut v = Vec::with_capacity(k);
        for (i, &n) in occ.iter().enumerate() {
            v.extend(std::iter::repeat(i).take(n as usize));
        }
        v
    };
    let norm = |occ: &[u8]| -> f64 { occ.iter().map(|&n| factorial(n as usize)).product() };
    let mut sub = vec![0.0; k * k];
    for w in 0..d {
        let wo = lb.state(w);
        let wl = expand(wo);
        for e in 0..d {
            let eo = lb.state(e);
            let el = expand(eo);
            for (i, &r) in el.iter().enumerate() {
                for (j, &c) in wl.iter().enumerate() {
                    sub[i * k + j] = block[r * m + c];
                }
            }
            out[w * d + e] = permanent(&sub, k) / (norm(wo) * norm(eo)).sqrt();
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Ryser's formula.
pub fn permanent(a: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut prod = 1.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    row += a[i * n + j];
                }
            }
            prod *= row;
        }
        let sign = if (n as u32 - mask.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * prod;
    }
    total
}

/// Applies the square matrix `mat` along `axis` of a row-major tensor.
fn mode_product(data: &mut [Complex64], dims: &[usize], axis: usize, mat: &[f64]) {
    let d = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut fiber = vec![Complex64::new(0.0, 0.0); d];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * d * inner + i;
            for (j, f) in fiber.iter_mut().enumerate() {
                *f = data[base + j * inner];
            }
            for r in 0..d {
                let row = &mat[r * d..(r + 1) * d];
                data[base + r * inner] = row.iter().zip(&fiber).map(|(x, f)| f * x).sum();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::hamiltonian::{ground_state, ManyBodySystem};
    use crate::lattice::{build_wannier, solve_one_body, GridSpec};

    fn triple(n_orb: usize) -> SinglePartBasis {
        solve_one_body(&GridSpec::new(3, 150, 10.0).unwrap(), n_orb).unwrap()
    }

    fn pseudo_state(dim: usize, seed: f64) -> ManyBodyState {
        let v: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new((i as f64 * seed).sin(), (i as f64 * seed * 1.7).cos()))
            .collect();
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        ManyBodyState::new(v.into_iter().map(|c| c / n).collect(), 0.0).unwrap()
    }

    /// `<a_a^+ a_b> / N` by acting with the operators on occupation vectors.
    fn brute_density(fock: &FockBasis, psi: &[Complex64]) -> Vec<Complex64> {
        let n = fock.n_orb();
        let mut d = vec![Complex64::new(0.0, 0.0); n * n];
        for (s, occ) in fock.states().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    if occ[b] == 0 {
                        continue;
                    }
                    let mut o = occ.to_vec();
                    let mut amp = (o[b] as f64).sqrt();
                    o[b] -= 1;
                    amp *= (o[a] as f64 + 1.0).sqrt();
                    o[a] += 1;
                    let t = fock.index_of(&o).unwrap();
                    d[a * n + b] += psi[t].conj() * psi[s] * amp;
                }
            }
        }
        d.iter().map(|x| x / fock.particles() as f64).collect()
    }

    #[test]
    fn density_matches_brute_force() {
        let fock = FockBasis::new(3, 5).unwrap();
        let psi = pseudo_state(fock.len(), 0.31);
        let d = DensityProbe::new(&fock).density(&psi);
        let want = brute_density(&fock, psi.coeffs());
        for (x, y) in d.data.iter().zip(&want) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!((d.trace() - 1.0).abs() < 1e-12);
        let occ = d.natural_occupations();
        assert!(occ.iter().all(|&x| x > -1e-12));
        assert!((occ.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_boson_grid_density() {
        let basis = triple(3);
        let fock = FockBasis::new(1, 3).unwrap();
        let d = DensityProbe::new(&fock).density(&ManyBodyState::basis_state(3, 0));
        let rho = d.on_grid(&basis);
        let np = basis.grid().n_points();
        let phi = basis.orbital(0);
        let h = basis.grid().spacing();
        let mut trace = 0.0;
        for i in 0..np {
            trace += h * rho[i * np + i].re;
            for j in 0..np {
                assert!((rho[i * np + j] - phi[i] * phi[j]).norm() < 1e-12);
            }
        }
        assert!((trace - 1.0).abs() < 1e-10);
    }

    #[test]
    fn momentum_normalization_and_parity() {
        let basis = triple(6);
        let sys = ManyBodySystem::new(&basis, 3).unwrap();
        let (_, gs) = ground_state(&sys, 0.5, Exec::Sequential).unwrap();
        let d = DensityProbe::new(sys.fock()).density(&gs);
        let probe = MomentumProbe::new(&basis, MomentumGrid::symmetric(4.0, 401).unwrap());
        assert!((probe.integral(&d) - 1.0).abs() < 1e-6);
        let nk = probe.distribution(&d);
        assert!(nk.iter().all(|&x| x > -1e-10));
        for i in 0..nk.len() {
            assert!((nk[i] - nk[nk.len() - 1 - i]).abs() < 1e-8);
        }
        assert!((probe.at_zero(&d) - nk[200]).abs() < 1e-12);
        // a generic complex state still integrates to one
        let psi = pseudo_state(sys.dim(), 0.77);
        let d = DensityProbe::new(sys.fock()).density(&psi);
        assert!((probe.integral(&d) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn free_box_has_one_central_peak() {
        let basis = solve_one_body(&GridSpec::new(1, 100, 0.0).unwrap(), 2).unwrap();
        let d = OneBodyDensity::pure(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let probe = MomentumProbe::new(&basis, MomentumGrid::symmetric(4.0, 201).unwrap());
        let nk = probe.distribution(&d);
        let maxima: Vec<usize> = (1..nk.len() - 1)
            .filter(|&i| nk[i] > nk[i - 1] && nk[i] > nk[i + 1] && nk[i] > 0.2 * nk[100])
            .collect();
        assert_eq!(maxima, vec![100]);
    }

    #[test]
    fn cradle_and_breathing_on_ground_state() {
        let basis = triple(9);
        let sys = ManyBodySystem::new(&basis, 4).unwrap();
        let (_, gs) = ground_state(&sys, 0.1, Exec::Sequential).unwrap();
        let d = DensityProbe::new(sys.fock()).density(&gs);
        let region = RegionProbe::new(&basis, 4);
        let (l, r) = region.asymmetry(&d);
        assert!((l + r).abs() < 1e-8);
        let s2 = region.breathing(&d).unwrap();
        assert!(s2 > 0.0);
        // oracle: fine midpoint quadrature of the diagonal density
        let np = 20_000;
        let (a, b) = basis.grid().middle_window().unwrap();
        let coeffs: Vec<Vec<f64>> = (0..9).map(|k| sine_coefficients(&basis, k)).collect();
        let rho_at = |x: f64| -> f64 {
            let phi: Vec<f64> = coeffs.iter().map(|c| eval_orbital(&basis, c, x)).collect();
            let mut acc = 0.0;
            for p in 0..9 {
                for q in 0..9 {
                    acc += d.get(p, q).re * phi[p] * phi[q];
                }
            }
            4.0 * acc
        };
        let dx = (b - a) / np as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..np {
            let x = a + (i as f64 + 0.5) * dx;
            let r = rho_at(x) * dx;
            m0 += r;
            m1 += x * r;
            m2 += x * x * r;
        }
        assert!((s2 - (m2 - m1 * m1 / m0)).abs() < 1e-6);
        let even = RegionProbe::new(&solve_one_body(&GridSpec::new(2, 100, 10.0).unwrap(), 2).unwrap(), 1);
        assert!(even.breathing(&OneBodyDensity::pure(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])).is_err());
    }

    fn sine_coefficients(basis: &SinglePartBasis, a: usize) -> Vec<f64> {
        let n = basis.grid().n_points();
        let h = basis.grid().spacing();
        let s = crate::sine::SineTransform::dense(n);
        let u: Vec<f64> = basis.orbital(a).iter().map(|p| p * h.sqrt()).collect();
        (0..n).map(|j| (0..n).map(|i| s[j * n + i] * u[i]).sum()).collect()
    }

    /// Orbital value off the grid from its sine-mode expansion.
    fn eval_orbital(basis: &SinglePartBasis, c: &[f64], x: f64) -> f64 {
        let l = basis.grid().length();
        c.iter()
            .enumerate()
            .map(|(j, cj)| cj * (2.0 / l).sqrt() * ((j + 1) as f64 * std::f64::consts::PI * (x + 0.5 * l) / l).sin())
            .sum()
    }

    #[test]
    fn permanent_against_permutation_sum() {
        let a: Vec<f64> = (0..16).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let mut brute = 0.0;
        let idx = [0usize, 1, 2, 3];
        let mut perms = Vec::new();
        permute(&mut idx.to_vec(), 0, &mut perms);
        for p in perms {
            brute += (0..4).map(|i| a[i * 4 + p[i]]).product::<f64>();
        }
        assert!((permanent(&a, 4) - brute).abs() < 1e-12);
    }

    fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == v.len() {
            out.push(v.clone());
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, out);
            v.swap(k, i);
        }
    }

    #[test]
    fn single_particle_projection_is_the_change_of_basis() {
        let basis = triple(9);
        let wannier = build_wannier(&basis, 3).unwrap();
        let fock = FockBasis::new(1, 9).unwrap();
        let proj = WannierProjector::new(&fock, &basis, &wannier).unwrap();
        for a in 0..9 {
            let state = ManyBodyState::basis_state(9, fock.index_of(&unit(9, a)).unwrap());
            let p = proj.project(&state);
            for w in 0..9 {
                let mut occ = vec![0u8; 9];
                occ[w] = 1;
                let s = proj.wannier_index(&occ).unwrap();
                assert!((p.coeffs[s].re - wannier.overlap(a, w)).abs() < 1e-8);
                assert!(p.coeffs[s].im.abs() < 1e-14);
            }
            assert!((p.captured - 1.0).abs() < 1e-9);
        }
    }

    fn unit(n: usize, a: usize) -> Vec<u8> {
        let mut v = vec![0u8; n];
        v[a] = 1;
        v
    }

    #[test]
    fn projection_is_unitary_and_partitions_by_band() {
        let basis = triple(9);
        let wannier = build_wannier(&basis, 3).unwrap();
        let fock = FockBasis::new(3, 9).unwrap();
        let proj = WannierProjector::new(&fock, &basis, &wannier).unwrap();
        let psi = pseudo_state(fock.len(), 0.123);
        let p = proj.project(&psi);
        assert!((p.captured - 1.0).abs() < 1e-9);
        for band in 0..3 {
            let total: f64 = (0..=3).map(|n0| p.band_occupation(n0, band).unwrap()).sum();
            assert!((total - p.captured).abs() < 1e-9);
            for n0 in 0..=3 {
                let a = p.band_occupation(n0, band).unwrap();
                let b = proj.band_occupation_direct(&psi, n0, band);
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(p.band_occupation(4, 0).is_err());
        // with only the lowest band of Wannier functions the captured weight
        // is the all-in-band-0 probability
        let low = build_wannier(&basis, 1).unwrap();
        let proj0 = WannierProjector::new(&fock, &basis, &low).unwrap();
        let p0 = proj0.project(&psi);
        assert!((p0.captured - proj.band_occupation_direct(&psi, 3, 0)).abs() < 1e-12);
    }

    #[test]
    fn ground_state_is_dominated_by_one_two_one() {
        let basis = triple(9);
        let wannier = build_wannier(&basis, 3).unwrap();
        let sys = ManyBodySystem::new(&basis, 4).unwrap();
        let (_, gs) = ground_state(&sys, 0.1, Exec::Sequential).unwrap();
        let proj = WannierProjector::new(sys.fock(), &basis, &wannier).unwrap();
        let p = proj.project(&gs);
        let best = (0..p.coeffs.len())
            .max_by(|&a, &b| p.weight(a).total_cmp(&p.weight(b)))
            .unwrap();
        let target = proj.wannier_index(&[1, 2, 1]).unwrap();
        assert_eq!(best, target);
        assert_eq!(proj.class_of(target), NumberStateClass::SinglePairs);
        let classes = proj.class_weights(&p);
        let total: f64 = classes.iter().map(|c| c.1).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(classes.last().unwrap().1, 0.0);
    }

    #[test]
    fn class_labels() {
        assert_eq!(NumberStateClass::from_pattern(&[2, 1, 1]).label(), "SP");
        assert_eq!(NumberStateClass::from_pattern(&[2, 2, 0]).label(), "DP");
        assert_eq!(NumberStateClass::from_pattern(&[3, 1, 0]).label(), "T");
        assert_eq!(NumberStateClass::from_pattern(&[4, 0, 0]).label(), "Q");
        assert_eq!(NumberStateClass::from_pattern(&[1, 1, 1]), NumberStateClass::Other);
    }
}
