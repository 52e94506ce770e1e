//! Execution strategy for data-parallel loops.
//!
//! Every hot loop in the crate (matrix rows, matrix-free operator
//! application, per-sample observables, parameter scans) goes through the
//! helpers here. With the `parallel` feature the [`Exec::Parallel`] strategy
//! dispatches to rayon; without it, or with [`Exec::Sequential`], the same
//! closures run on the calling thread. Both paths produce bit-identical
//! results because every parallel loop writes disjoint outputs and all
//! reductions happen sequentially afterwards.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this strategy actually runs on the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f).collect()`.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps over a slice, preserving order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Calls `f(i, out_i)` for each element of `out`.
    pub fn for_each_mut<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            return;
        }
        out.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }

    /// Calls `f(row, chunk)` for consecutive chunks of `width` elements.
    pub fn for_each_chunk<T, F>(self, out: &mut [T], width: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        out.chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c));
    }
}
