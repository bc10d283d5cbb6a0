use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::bracket;

/// Which one-sided x-derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// f(s_i, x_j) on a tensor grid; see the module docs for the interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    t_nodes: Vec<f64>,
    x_nodes: Vec<f64>,
    /// Row-major: `values[i * n_x + j] = f(s_i, x_j)`.
    values: Vec<f64>,
    lipschitz_x: f64,
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.iter().all(|v| v.is_finite()) && xs.windows(2).all(|w| w[1] > w[0])
}

impl GridFunction {
    /// Build and validate. `lipschitz_x` must bound every x-slope.
    pub fn new(t_nodes: Vec<f64>, x_nodes: Vec<f64>, values: Vec<f64>, lipschitz_x: f64) -> Result<Self> {
        if t_nodes.is_empty() || x_nodes.is_empty() {
            return Err(invalid("grid function needs at least one t-node and one x-node"));
        }
        if t_nodes[0] != 0.0 {
            return Err(invalid(format!("first t-node must be 0, got {}", t_nodes[0])));
        }
        if !strictly_increasing(&t_nodes) || !strictly_increasing(&x_nodes) {
            return Err(invalid("grid nodes must be finite and strictly increasing"));
        }
        if values.len() != t_nodes.len() * x_nodes.len() {
            return Err(invalid(format!(
                "expected {}×{} values, got {}",
                t_nodes.len(),
                x_nodes.len(),
                values.len()
            )));
        }
        let g = GridFunction { t_nodes, x_nodes, values, lipschitz_x };
        g.validate()?;
        Ok(g)
    }

    /// Sample `f` on the grid; the Lipschitz bound is the largest sampled
    /// slope.
    pub fn from_fn(t_nodes: Vec<f64>, x_nodes: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(t_nodes.len() * x_nodes.len());
        for &t in &t_nodes {
            values.extend(x_nodes.iter().map(|&x| f(t, x)));
        }
        let mut g = GridFunction { t_nodes, x_nodes, values, lipschitz_x: f64::INFINITY };
        g.lipschitz_x = g.max_abs_slope();
        g.validate()?;
        Ok(g)
    }

    /// A function constant in time.
    pub fn time_independent(x_nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut g = GridFunction { t_nodes: vec![0.0], x_nodes, values, lipschitz_x: f64::INFINITY };
        g.lipschitz_x = g.max_abs_slope();
        g.validate()?;
        Ok(g)
    }

    /// Re-check membership: finite values, slopes within the declared
    /// Lipschitz bound, finite column t-variation.
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Property(format!("non-finite grid value {v}")));
        }
        let max = self.max_abs_slope();
        if !(max <= self.lipschitz_x * (1.0 + 1e-9) + 1e-12) {
            return Err(Error::Property(format!(
                "x-slope {max} exceeds declared Lipschitz bound {}",
                self.lipschitz_x
            )));
        }
        let n_t = self.n_t();
        for j in 0..self.n_x() {
            let v = self.t_variation(j, 0.0, self.t_nodes[n_t - 1]);
            if !v.is_finite() {
                return Err(Error::Property(format!("infinite t-variation in column {j}")));
            }
        }
        Ok(())
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn n_t(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn n_x(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn lipschitz_x(&self) -> f64 {
        self.lipschitz_x
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_x();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_x() + j]
    }

    /// Row holding f(t, ·): the last i with s_i ≤ t.
    pub fn row_index(&self, t: f64) -> usize {
        bracket(&self.t_nodes, t).unwrap_or(0)
    }

    /// Row holding f⁻(t, ·) = f(t−, ·): the last i with s_i < t, or 0 at t ≤ s₀.
    pub fn left_row_index(&self, t: f64) -> usize {
        let i = self.t_nodes.partition_point(|&s| s < t);
        i.saturating_sub(1)
    }

    /// Piecewise-linear interpolation of row `i` at x with flat extension.
    pub fn row_value(&self, i: usize, x: f64) -> f64 {
        let xs = &self.x_nodes;
        let row = self.row(i);
        match bracket(xs, x) {
            None => row[0],
            Some(j) if j + 1 >= xs.len() => row[xs.len() - 1],
            Some(j) => {
                let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
                row[j] + w * (row[j + 1] - row[j])
            }
        }
    }

    /// Slope of segment `j` (between x_j and x_{j+1}) in row `i`.
    pub fn segment_slope(&self, i: usize, j: usize) -> f64 {
        let row = self.row(i);
        (row[j + 1] - row[j]) / (self.x_nodes[j + 1] - self.x_nodes[j])
    }

    /// One-sided x-derivative of row `i` at x. Zero beyond the x-range.
    pub fn row_slope(&self, i: usize, x: f64, side: Side) -> f64 {
        let xs = &self.x_nodes;
        let m = xs.len();
        if m < 2 {
            return 0.0;
        }
        // Index of the segment whose closure touches x from the chosen side.
        let seg = match side {
            Side::Right => match bracket(xs, x) {
                None => return 0.0,
                Some(j) if j + 1 >= m => return 0.0,
                Some(j) => j,
            },
            Side::Left => {
                let k = xs.partition_point(|&v| v < x);
                if k == 0 || k > m - 1 && x > xs[m - 1] {
                    return 0.0;
                }
                k - 1
            }
        };
        self.segment_slope(i, seg)
    }

    /// f(t, x).
    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.row_value(self.row_index(t), x)
    }

    /// f⁻(t, x).
    pub fn value_left(&self, t: f64, x: f64) -> f64 {
        self.row_value(self.left_row_index(t), x)
    }

    /// One-sided x-derivative of f(t, ·) at x.
    pub fn one_sided_x_derivative(&self, t: f64, x: f64, side: Side) -> f64 {
        self.row_slope(self.row_index(t), x, side)
    }

    /// One-sided x-derivative of f⁻(t, ·) at x.
    pub fn one_sided_x_derivative_left(&self, t: f64, x: f64, side: Side) -> f64 {
        self.row_slope(self.left_row_index(t), x, side)
    }

    /// The function whose row at s_i is f(s_{i−1}, ·) (row 0 unchanged): f⁻
    /// evaluated at the t-nodes.
    pub fn left_limit(&self) -> GridFunction {
        let n = self.n_x();
        let mut values = Vec::with_capacity(self.values.len());
        values.extend_from_slice(self.row(0));
        values.extend_from_slice(&self.values[..self.values.len() - n]);
        GridFunction {
            t_nodes: self.t_nodes.clone(),
            x_nodes: self.x_nodes.clone(),
            values,
            lipschitz_x: self.lipschitz_x,
        }
    }

    /// Σ |f(s_i, x_j) − f(s_{i−1}, x_j)| over t-nodes s_i in (t0, t1].
    pub fn t_variation(&self, j: usize, t0: f64, t1: f64) -> f64 {
        let mut v = 0.0;
        for i in 1..self.n_t() {
            let s = self.t_nodes[i];
            if s > t0 && s <= t1 {
                v += (self.at(i, j) - self.at(i - 1, j)).abs();
            }
        }
        v
    }

    pub fn max_abs_slope(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.n_t() {
            for j in 0..self.n_x().saturating_sub(1) {
                max = max.max(self.segment_slope(i, j).abs());
            }
        }
        max
    }

    /// Every row is a convex sequence in x.
    pub fn rows_convex(&self, tol: f64) -> bool {
        (0..self.n_t()).all(|i| {
            (1..self.n_x().saturating_sub(1)).all(|j| self.segment_slope(i, j) >= self.segment_slope(i, j - 1) - tol)
        })
    }

    /// Apply `op` value-wise; the Lipschitz bound is recomputed.
    pub fn map_values(&self, op: impl Fn(f64) -> f64) -> Result<GridFunction> {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v = op(*v));
        g.lipschitz_x = g.max_abs_slope();
        g.validate()?;
        Ok(g)
    }

    /// Point-wise linear combination a·self + b·other on a shared grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if self.t_nodes != other.t_nodes || self.x_nodes != other.x_nodes {
            return Err(invalid("linear combination needs identical grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(u, v)| a * u + b * v).collect();
        let mut g = GridFunction {
            t_nodes: self.t_nodes.clone(),
            x_nodes: self.x_nodes.clone(),
            values,
            lipschitz_x: f64::INFINITY,
        };
        g.lipschitz_x = g.max_abs_slope();
        Ok(g)
    }

    /// Sample this function onto other nodes (rows by right-continuous
    /// lookup, columns by interpolation).
    pub fn resample(&self, t_nodes: Vec<f64>, x_nodes: Vec<f64>) -> Result<GridFunction> {
        GridFunction::from_fn(t_nodes, x_nodes, |t, x| self.value(t, x))
    }
}
