//! Orthonormal discrete sine transform on the Dirichlet grid.
//!
//! For interior points `x_i = -L/2 + i h`, `i = 1..=n`, `h = L/(n+1)`, the
//! matrix `S_ij = sqrt(2/(n+1)) sin(i j pi/(n+1))` is symmetric and
//! orthogonal, and diagonalizes the discrete kinetic operator of the sine
//! DVR. The transform is computed through an FFT of the odd extension.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("n", &self.n).finish()
    }
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (n + 1));
        Self {
            n,
            fft,
            scale: (2.0 / (n + 1) as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Applies `S` in place. `S` is its own inverse.
    pub fn apply(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let n = self.n;
        assert_eq!(data.len(), n);
        let m = 2 * (n + 1);
        scratch.clear();
        scratch.resize(m, Complex64::new(0.0, 0.0));
        for (j, &v) in data.iter().enumerate() {
            scratch[j + 1] = v;
            scratch[m - j - 1] = -v;
        }
        self.fft.process(scratch);
        // FFT of the odd extension equals -2i * DST-I.
        let factor = Complex64::new(0.0, 0.5 * self.scale);
        for (k, out) in data.iter_mut().enumerate() {
            *out = scratch[k + 1] * factor;
        }
    }

    /// Dense matrix `S` (row-major), for small grids and tests.
    pub fn dense(n: usize) -> Vec<f64> {
        let scale = (2.0 / (n + 1) as f64).sqrt();
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = scale
                    * (((i + 1) * (j + 1)) as f64 * std::f64::consts::PI / (n + 1) as f64).sin();
            }
        }
        s
    }
}
