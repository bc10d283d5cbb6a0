//! Execution strategy for per-path work and the deterministic reductions
//! applied to its output.
//!
//! Per-path results are always collected in path order before reduction, so
//! the parallel and sequential strategies produce bit-identical numbers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    /// Rayon work-stealing over paths (sequential when built without the
    /// `parallel` feature).
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    /// Map `f` over `0..n`, returning results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Like [`Exec::map`] but over a slice.
    pub fn map_slice<'a, S, T, F>(self, items: &'a [S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&'a S) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }
}

/// Pairwise (cascade) summation. Error grows as O(log n) rather than O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl McEstimate {
    pub const ZERO: McEstimate = McEstimate { mean: 0.0, se: 0.0, n: 0 };

    pub fn exact(value: f64) -> Self {
        McEstimate { mean: value, se: 0.0, n: 0 }
    }

    /// Sample mean and standard error, both computed with pairwise sums.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::ZERO;
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return McEstimate { mean, se: 0.0, n };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        McEstimate { mean, se: (var / n as f64).sqrt(), n }
    }

    /// Standard error of the difference of two estimates treated as separate
    /// experiments.
    pub fn combined_se(&self, other: &McEstimate) -> f64 {
        self.se.hypot(other.se)
    }
}

/// Element-wise sum of two equally long sample vectors.
pub fn add_samples(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}
