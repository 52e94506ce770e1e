//! Contact-interaction matrix elements `U_abcd = int phi_a phi_b phi_c phi_d dx`.
//!
//! Only the canonical set is computed: with pair densities
//! `rho_p = phi_a phi_b` for `p = (a <= b)`, the tensor is the Gram matrix
//! `U_pq = h sum_i rho_p(x_i) rho_q(x_i)`, which is symmetric under all 24
//! index permutations by construction.

use faer::{Mat, Parallelism};

use crate::fock::orbital_pairs;
use crate::lattice::SinglePartBasis;

#[derive(Debug, Clone)]
pub struct InteractionTensor {
    n_orb: usize,
    pairs: Vec<(usize, usize)>,
    /// `P x P` pair matrix, row-major.
    values: Vec<f64>,
}

impl InteractionTensor {
    pub fn new(basis: &SinglePartBasis) -> Self {
        let n_orb = basis.n_orb();
        let pairs = orbital_pairs(n_orb);
        let np = basis.grid().n_points();
        let h = basis.grid().spacing();
        let dens = Mat::from_fn(pairs.len(), np, |p, i| {
            let (a, b) = pairs[p];
            basis.orbital(a)[i] * basis.orbital(b)[i]
        });
        let mut gram = Mat::<f64>::zeros(pairs.len(), pairs.len());
        faer::linalg::matmul::matmul(
            gram.as_mut(),
            dens.as_ref(),
            dens.transpose(),
            None,
            h,
            Parallelism::None,
        );
        let p = pairs.len();
        let mut values = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                // symmetrize explicitly so U_pq == U_qp bit for bit
                let v = gram.read(i.max(j), i.min(j));
                values[i * p + j] = v;
                values[j * p + i] = v;
            }
        }
        Self {
            n_orb,
            pairs,
            values,
        }
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Index of the unordered pair `{a, b}` in [`pairs`](Self::pairs).
    pub fn pair_index(&self, a: usize, b: usize) -> usize {
        let (c, d) = if a <= b { (a, b) } else { (b, a) };
        c * self.n_orb - c * (c + 1) / 2 + d
    }

    pub fn pair_value(&self, p: usize, q: usize) -> f64 {
        self.values[p * self.pairs.len() + q]
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.pair_value(self.pair_index(a, b), self.pair_index(c, d))
    }

    /// Pair-space kernel `K_pq = m_p m_q U_pq / 2`, with `m = 2` for distinct
    /// orbitals and `1` otherwise, so that the interaction operator reads
    /// `g sum_pq K_pq A_p^dagger A_q` with `A_(c,d) = a_c a_d`.
    pub fn pair_kernel(&self) -> Vec<f64> {
        let p = self.pairs.len();
        let mult: Vec<f64> = self
            .pairs
            .iter()
            .map(|&(a, b)| if a == b { 1.0 } else { 2.0 })
            .collect();
        let mut k = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                k[i * p + j] = 0.5 * mult[i] * mult[j] * self.values[i * p + j];
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{solve_one_body, GridSpec};
    use std::f64::consts::PI;

    #[test]
    fn box_ground_orbital() {
        let grid = GridSpec::new(1, 100, 0.0).unwrap();
        let basis = solve_one_body(&grid, 3).unwrap();
        let u = InteractionTensor::new(&basis);
        assert!((u.get(0, 0, 0, 0) - 1.5 / PI).abs() < 1e-10);
        // (2/pi) int sin^2 x sin^2 2x = 1/pi
        assert!((u.get(0, 0, 1, 1) - 1.0 / PI).abs() < 1e-10);
        // parity: three even, one odd
        assert!(u.get(0, 0, 0, 1).abs() < 1e-12);
        assert!(u.get(0, 2, 2, 1).abs() < 1e-12);
    }

    #[test]
    fn full_permutation_symmetry() {
        let grid = GridSpec::new(3, 120, 10.0).unwrap();
        let basis = solve_one_body(&grid, 6).unwrap();
        let u = InteractionTensor::new(&basis);
        let n = 6;
        for a in 0..n {
            assert!(u.get(a, a, a, a) > 0.0);
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = u.get(a, b, c, d);
                        for w in [
                            u.get(d, c, b, a),
                            u.get(b, a, c, d),
                            u.get(c, d, a, b),
                            u.get(a, c, b, d),
                            u.get(a, d, c, b),
                        ] {
                            assert!((v - w).abs() < 1e-10);
                        }
                    }
                }
            }
        }
        // direct quadrature oracle
        let h = grid.spacing();
        let direct: f64 = (0..grid.n_points())
            .map(|i| {
                h * basis.orbital(0)[i]
                    * basis.orbital(1)[i]
                    * basis.orbital(3)[i]
                    * basis.orbital(4)[i]
            })
            .sum();
        assert!((direct - u.get(0, 1, 3, 4)).abs() < 1e-12);
    }
}
