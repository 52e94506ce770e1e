use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `| ||psi|| - 1 |` accepted by [`ManyBodyState::new`].
pub const NORM_TOL: f64 = 1e-9;

/// Complex coefficient vector over a Fock basis, stamped with a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyState {
    coeffs: Vec<Complex64>,
    time: f64,
}

impl ManyBodyState {
    pub fn new(coeffs: Vec<Complex64>, time: f64) -> Result<Self> {
        let n = norm(&coeffs);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter {
                name: "state",
                reason: format!("norm {n} differs from 1"),
            });
        }
        Ok(Self { coeffs, time })
    }

    /// Normalizes a real vector and fixes the sign so the largest-magnitude
    /// entry is positive.
    pub fn from_real(v: &[f64], time: f64) -> Self {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let big = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let s = if big < 0.0 { -1.0 / n } else { 1.0 / n };
        Self {
            coeffs: v.iter().map(|&x| Complex64::new(x * s, 0.0)).collect(),
            time,
        }
    }

    /// Basis state `|index>`.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
        coeffs[index] = Complex64::new(1.0, 0.0);
        Self { coeffs, time: 0.0 }
    }

    pub(crate) fn from_parts_unchecked(coeffs: Vec<Complex64>, time: f64) -> Self {
        Self { coeffs, time }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &ManyBodyState) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &ManyBodyState) -> f64 {
        self.overlap(other).norm_sqr()
    }
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_and_norm() {
        let s = ManyBodyState::from_real(&[0.1, -3.0, 0.2], 0.0);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!(s.coeffs()[1].re > 0.0);
        assert!(ManyBodyState::new(vec![Complex64::new(0.5, 0.0)], 0.0).is_err());
        let b = ManyBodyState::basis_state(3, 2);
        assert!((s.fidelity(&s) - 1.0).abs() < 1e-14);
        assert!(b.fidelity(&s) > 0.0);
    }
}
