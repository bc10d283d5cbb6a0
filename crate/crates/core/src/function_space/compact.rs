use serde::{Deserialize, Serialize};

use super::GridFunction;
use crate::error::{invalid, Error, Result};

/// Closed box [t_a, t_b] × [x_a, x_b] with t_a > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub t_a: f64,
    pub t_b: f64,
    pub x_a: f64,
    pub x_b: f64,
}

impl SupportBox {
    pub fn contains(&self, t: f64, x: f64) -> bool {
        t >= self.t_a && t <= self.t_b && x >= self.x_a && x <= self.x_b
    }
}

/// A grid function vanishing outside a declared box away from t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactGridFunction {
    grid: GridFunction,
    support: SupportBox,
}

impl CompactGridFunction {
    /// Check that `grid` vanishes off `support`. Rows whose time interval
    /// [s_i, s_{i+1}) misses [t_a, t_b] must be zero, as must the first and
    /// last columns (the flat extension) and every node outside [x_a, x_b].
    pub fn new(grid: GridFunction, support: SupportBox) -> Result<Self> {
        let SupportBox { t_a, t_b, x_a, x_b } = support;
        if !(t_a > 0.0 && t_a <= t_b && x_a <= x_b) || ![t_a, t_b, x_a, x_b].iter().all(|v| v.is_finite()) {
            return Err(invalid(format!("support box {support:?} must be finite with t_a > 0")));
        }
        let ts = grid.t_nodes();
        let xs = grid.x_nodes();
        let n_t = grid.n_t();
        for i in 0..n_t {
            let start = ts[i];
            let end = ts.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let row_inside = end > t_a && start <= t_b;
            for (j, &x) in xs.iter().enumerate() {
                let edge = j == 0 || j + 1 == xs.len();
                let inside = row_inside && !edge && x >= x_a && x <= x_b;
                if !inside && grid.at(i, j) != 0.0 {
                    return Err(Error::Property(format!(
                        "value {} at (t={start}, x={x}) lies outside the declared support",
                        grid.at(i, j)
                    )));
                }
            }
        }
        Ok(CompactGridFunction { grid, support })
    }

    /// Infer the tightest box from the nonzero entries.
    pub fn from_grid(grid: GridFunction) -> Result<Self> {
        let ts = grid.t_nodes().to_vec();
        let xs = grid.x_nodes().to_vec();
        let (mut i_lo, mut i_hi, mut j_lo, mut j_hi) = (usize::MAX, 0, usize::MAX, 0);
        for i in 0..grid.n_t() {
            for j in 0..grid.n_x() {
                if grid.at(i, j) != 0.0 {
                    i_lo = i_lo.min(i);
                    i_hi = i_hi.max(i);
                    j_lo = j_lo.min(j);
                    j_hi = j_hi.max(j);
                }
            }
        }
        if i_lo == usize::MAX {
            return Err(invalid("identically zero function has empty support"));
        }
        if i_hi + 1 >= ts.len() {
            return Err(Error::Property("last row is nonzero, so the support is unbounded in t".into()));
        }
        let support = SupportBox {
            t_a: ts[i_lo],
            t_b: ts[i_hi + 1],
            x_a: xs[j_lo.saturating_sub(1)],
            x_b: xs[(j_hi + 1).min(xs.len() - 1)],
        };
        CompactGridFunction::new(grid, support)
    }

    /// Tensor product g(t)·h(x) of a time profile (one value per t-node)
    /// and a space profile (one value per x-node).
    pub fn tensor(t_nodes: Vec<f64>, time_values: &[f64], x_nodes: Vec<f64>, space_values: &[f64]) -> Result<Self> {
        if time_values.len() != t_nodes.len() || space_values.len() != x_nodes.len() {
            return Err(invalid("profile lengths must match node counts"));
        }
        let mut values = Vec::with_capacity(t_nodes.len() * x_nodes.len());
        for &g in time_values {
            values.extend(space_values.iter().map(|&h| g * h));
        }
        let lip = time_values.iter().fold(0.0f64, |m, g| m.max(g.abs()))
            * space_values
                .windows(2)
                .zip(x_nodes.windows(2))
                .fold(0.0f64, |m, (v, x)| m.max(((v[1] - v[0]) / (x[1] - x[0])).abs()));
        let grid = GridFunction::new(t_nodes, x_nodes, values, lip)?;
        CompactGridFunction::from_grid(grid)
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    pub fn support(&self) -> SupportBox {
        self.support
    }

    pub fn into_grid(self) -> GridFunction {
        self.grid
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.grid.value(t, x)
    }

    pub fn value_left(&self, t: f64, x: f64) -> f64 {
        self.grid.value_left(t, x)
    }

    pub fn sup_abs(&self) -> f64 {
        self.grid.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
