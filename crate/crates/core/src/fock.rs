//! Occupation-number basis of `N` bosons in `n_orb` orbitals.
//!
//! States are stored in descending lexicographic order, so index 0 is
//! `(N, 0, ..., 0)`. Ranking uses binomial counts and never touches a hash
//! map.

use crate::error::{invalid, Error, Result};

/// Default refusal threshold for the Fock space dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

#[derive(Debug, Clone)]
pub struct FockBasis {
    particles: usize,
    n_orb: usize,
    occupations: Vec<u8>,
    /// `binom[q][r]` = number of ways to put `q` bosons in `r` orbitals.
    ways: Vec<Vec<u64>>,
}

/// Number of ways to distribute `q` bosons over `r` orbitals.
pub fn dimension(particles: usize, n_orb: usize) -> u128 {
    if n_orb == 0 {
        return u128::from(particles == 0);
    }
    binomial(particles + n_orb - 1, particles)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

impl FockBasis {
    pub fn new(particles: usize, n_orb: usize) -> Result<Self> {
        Self::with_cap(particles, n_orb, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(particles: usize, n_orb: usize, cap: usize) -> Result<Self> {
        if particles == 0 {
            return Err(invalid("particles", "need at least one boson"));
        }
        if n_orb == 0 {
            return Err(invalid("n_orb", "need at least one orbital"));
        }
        if particles > u8::MAX as usize {
            return Err(invalid("particles", "at most 255 bosons"));
        }
        let dim = dimension(particles, n_orb);
        if dim > cap as u128 {
            return Err(Error::DimensionCap {
                dimension: dim,
                cap,
            });
        }
        Ok(Self::build(particles, n_orb))
    }

    /// Builds without a cap; used for the small auxiliary spaces.
    pub(crate) fn build(particles: usize, n_orb: usize) -> Self {
        let ways: Vec<Vec<u64>> = (0..=particles)
            .map(|q| (0..=n_orb).map(|r| dimension(q, r) as u64).collect())
            .collect();
        let dim = ways[particles][n_orb] as usize;
        let mut occupations = Vec::with_capacity(dim * n_orb);
        let mut current = vec![0u8; n_orb];
        fill(&mut current, 0, particles, &mut occupations);
        debug_assert_eq!(occupations.len(), dim * n_orb);
        Self {
            particles,
            n_orb,
            occupations,
            ways,
        }
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.n_orb
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    pub fn state(&self, index: usize) -> &[u8] {
        &self.occupations[index * self.n_orb..(index + 1) * self.n_orb]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u8]> {
        self.occupations.chunks(self.n_orb)
    }

    /// Index of an occupation vector, or `None` if it is not in the basis.
    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.n_orb {
            return None;
        }
        let total: usize = occ.iter().map(|&n| n as usize).sum();
        if total != self.particles {
            return None;
        }
        let mut remaining = self.particles;
        let mut index = 0u64;
        for (a, &n) in occ.iter().enumerate() {
            let n = n as usize;
            let rest = self.n_orb - a - 1;
            // states sharing the prefix but with more bosons in orbital a
            for higher in n + 1..=remaining {
                index += self.ways[remaining - higher][rest];
            }
            remaining -= n;
        }
        Some(index as usize)
    }
}

fn fill(current: &mut [u8], pos: usize, remaining: usize, out: &mut Vec<u8>) {
    if pos + 1 == current.len() {
        current[pos] = remaining as u8;
        out.extend_from_slice(current);
        current[pos] = 0;
        return;
    }
    for n in (0..=remaining).rev() {
        current[pos] = n as u8;
        fill(current, pos + 1, remaining - n, out);
    }
    current[pos] = 0;
}

/// Sparse table of a family of lowering operators between `N`- and
/// `(N - k)`-boson spaces.
///
/// `forward` lists, for every source state, the `(operator, target, amplitude)`
/// triples with nonzero amplitude; `inverse` holds the same entries grouped
/// by target state as `(operator, source, amplitude)`.
#[derive(Debug, Clone)]
pub struct LoweringTable {
    pub target_dim: usize,
    pub n_ops: usize,
    forward_offsets: Vec<usize>,
    forward: Vec<(u32, u32, f64)>,
    inverse_offsets: Vec<usize>,
    inverse: Vec<(u32, u32, f64)>,
}

impl LoweringTable {
    pub fn forward(&self, source: usize) -> &[(u32, u32, f64)] {
        &self.forward[self.forward_offsets[source]..self.forward_offsets[source + 1]]
    }

    pub fn inverse(&self, target: usize) -> &[(u32, u32, f64)] {
        &self.inverse[self.inverse_offsets[target]..self.inverse_offsets[target + 1]]
    }

    pub fn entries(&self) -> usize {
        self.forward.len()
    }

    fn from_forward(source_dim: usize, target_dim: usize, n_ops: usize, rows: Vec<Vec<(u32, u32, f64)>>) -> Self {
        let mut forward_offsets = Vec::with_capacity(source_dim + 1);
        let mut forward = Vec::new();
        forward_offsets.push(0);
        for r in rows {
            forward.extend(r);
            forward_offsets.push(forward.len());
        }
        let mut counts = vec![0usize; target_dim + 1];
        for &(_, t, _) in &forward {
            counts[t as usize + 1] += 1;
        }
        for i in 0..target_dim {
            counts[i + 1] += counts[i];
        }
        let inverse_offsets = counts.clone();
        let mut cursor = counts;
        let mut inverse = vec![(0u32, 0u32, 0.0); forward.len()];
        for s in 0..source_dim {
            for &(op, t, amp) in &forward[forward_offsets[s]..forward_offsets[s + 1]] {
                let slot = &mut cursor[t as usize];
                inverse[*slot] = (op, s as u32, amp);
                *slot += 1;
            }
        }
        Self {
            target_dim,
            n_ops,
            forward_offsets,
            forward,
            inverse_offsets,
            inverse,
        }
    }
}

/// Unordered orbital pairs `(c, d)` with `c <= d`, in row-major order.
pub fn orbital_pairs(n_orb: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_orb * (n_orb + 1) / 2);
    for c in 0..n_orb {
        for d in c..n_orb {
            out.push((c, d));
        }
    }
    out
}

impl FockBasis {
    /// Single annihilators `a_b` into the `N - 1` space.
    pub fn single_lowering(&self) -> (FockBasis, LoweringTable) {
        let lower = FockBasis::build(self.particles - 1, self.n_orb);
        let mut occ = vec![0u8; self.n_orb];
        let rows: Vec<Vec<(u32, u32, f64)>> = (0..self.len())
            .map(|s| {
                let mut row = Vec::new();
                for b in 0..self.n_orb {
                    let n = self.state(s)[b];
                    if n == 0 {
                        continue;
                    }
                    occ.copy_from_slice(self.state(s));
                    occ[b] -= 1;
                    let t = lower.index_of(&occ).expect("lowered state in basis");
                    row.push((b as u32, t as u32, (n as f64).sqrt()));
                }
                row
            })
            .collect();
        let table = LoweringTable::from_forward(self.len(), lower.len(), self.n_orb, rows);
        (lower, table)
    }

    /// Pair annihilators `a_c a_d` (`c <= d`, indexed as in
    /// [`orbital_pairs`]) into the `N - 2` space. `None` for one boson.
    pub fn pair_lowering(&self) -> Option<(FockBasis, LoweringTable)> {
        if self.particles < 2 {
            return None;
        }
        let lower = FockBasis::build(self.particles - 2, self.n_orb);
        let pairs = orbital_pairs(self.n_orb);
        let mut occ = vec![0u8; self.n_orb];
        let rows: Vec<Vec<(u32, u32, f64)>> = (0..self.len())
            .map(|s| {
                let state = self.state(s);
                let mut row = Vec::new();
                for (p, &(c, d)) in pairs.iter().enumerate() {
                    let (nc, nd) = (state[c] as f64, state[d] as f64);
                    let amp = if c == d {
                        (nc * (nc - 1.0)).sqrt()
                    } else {
                        (nc * nd).sqrt()
                    };
                    if amp == 0.0 {
                        continue;
                    }
                    occ.copy_from_slice(state);
                    occ[c] -= 1;
                    occ[d] -= 1;
                    let t = lower.index_of(&occ).expect("lowered state in basis");
                    row.push((p as u32, t as u32, amp));
                }
                row
            })
            .collect();
        let table = LoweringTable::from_forward(self.len(), lower.len(), pairs.len(), rows);
        Some((lower, table))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimension_examples() {
        assert_eq!(FockBasis::new(4, 12).unwrap().len(), 1365);
        assert_eq!(FockBasis::new(1, 9).unwrap().len(), 9);
        assert_eq!(FockBasis::new(3, 24).unwrap().len(), 2600);
        assert_eq!(dimension(5, 16), 15504);
    }

    #[test]
    fn ordering_is_descending_lexicographic() {
        let b = FockBasis::new(2, 3).unwrap();
        let states: Vec<Vec<u8>> = b.states().map(|s| s.to_vec()).collect();
        assert_eq!(
            states,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
    }

    #[test]
    fn cap_refuses() {
        let err = FockBasis::with_cap(5, 16, 10_000).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { dimension: 15504, cap: 10_000 }));
        assert!(FockBasis::new(10, 40).is_err());
        assert!(FockBasis::new(0, 3).is_err());
        assert!(FockBasis::new(2, 0).is_err());
    }

    #[test]
    fn pair_table_is_consistent() {
        let b = FockBasis::new(3, 4).unwrap();
        let (lower, table) = b.pair_lowering().unwrap();
        assert_eq!(lower.particles(), 1);
        let mut seen = 0;
        for t in 0..lower.len() {
            for &(p, s, amp) in table.inverse(t) {
                assert!(table
                    .forward(s as usize)
                    .iter()
                    .any(|&(q, u, a)| q == p && u as usize == t && a == amp));
                seen += 1;
            }
        }
        assert_eq!(seen, table.entries());
        assert!(FockBasis::new(1, 4).unwrap().pair_lowering().is_none());
    }

    proptest! {
        #[test]
        fn enumeration_is_complete_and_ranked(particles in 1usize..6, n_orb in 1usize..7) {
            let b = FockBasis::new(particles, n_orb).unwrap();
            prop_assert_eq!(b.len() as u128, dimension(particles, n_orb));
            let mut prev: Option<Vec<u8>> = None;
            for (i, s) in b.states().enumerate() {
                prop_assert_eq!(s.iter().map(|&n| n as usize).sum::<usize>(), particles);
                prop_assert_eq!(b.index_of(s), Some(i));
                if let Some(p) = &prev {
                    prop_assert!(p.as_slice() > s);
                }
                prev = Some(s.to_vec());
            }
        }
    }
}
