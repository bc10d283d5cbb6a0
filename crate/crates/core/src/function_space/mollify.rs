use super::{BumpKernel, CompactGridFunction, GridFunction, Side, SpaceTimeFn};
use crate::error::{invalid, Error, Result};

/// θⁿ(t,x) = ∫₀¹ θ(t − s/n, x) α(s) ds.
///
/// Because θ is piecewise constant in t, θⁿ(t,·) is the mixture
/// Σ_i w_i(t) θ(s_i,·) with w_i(t) = A(n(t−s_i)) − A(n(t−s_{i+1})), A the
/// kernel distribution function. Nothing is discretised.
#[derive(Debug, Clone)]
pub struct TimeMollified {
    theta: CompactGridFunction,
    kernel: BumpKernel,
    n: f64,
}

pub fn mollify_time(theta: &CompactGridFunction, kernel: BumpKernel, n: usize) -> Result<TimeMollified> {
    let (lo, hi) = kernel.support();
    if !(lo > 0.0 && hi < 1.0) {
        return Err(invalid(format!("time kernel support [{lo}, {hi}] must lie inside (0, 1)")));
    }
    let t_start = theta.support().t_a;
    let min_n = (1.0 / t_start).floor() as usize + 1;
    if n < min_n {
        return Err(Error::MollifierSupport { t_start, min_n });
    }
    Ok(TimeMollified { theta: theta.clone(), kernel, n: n as f64 })
}

impl TimeMollified {
    pub fn n(&self) -> f64 {
        self.n
    }

    /// Mixture weights over the rows of θ at time t.
    pub fn weights(&self, t: f64) -> Vec<f64> {
        let ts = self.theta.grid().t_nodes();
        (0..ts.len())
            .map(|i| {
                let upper = self.kernel.cdf(self.n * (t - ts[i]));
                let lower = ts.get(i + 1).map_or(0.0, |&s| self.kernel.cdf(self.n * (t - s)));
                upper - lower
            })
            .collect()
    }

    fn mix(&self, t: f64, per_row: impl Fn(usize) -> f64) -> f64 {
        self.weights(t)
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| w * per_row(i))
            .sum()
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.mix(t, |i| self.theta.grid().row_value(i, x))
    }

    /// One-sided x-derivative; θⁿ is continuous in t so there is no
    /// separate left-limit version.
    pub fn x_derivative(&self, t: f64, x: f64, side: Side) -> f64 {
        self.mix(t, |i| self.theta.grid().row_slope(i, x, side))
    }

    /// ∂θⁿ/∂t = n Σ_i θ(s_i,x) [α(n(t−s_i)) − α(n(t−s_{i+1}))].
    pub fn t_derivative(&self, t: f64, x: f64) -> f64 {
        let g = self.theta.grid();
        let ts = g.t_nodes();
        (0..ts.len())
            .map(|i| {
                let up = self.kernel.pdf(self.n * (t - ts[i]));
                let down = ts.get(i + 1).map_or(0.0, |&s| self.kernel.pdf(self.n * (t - s)));
                g.row_value(i, x) * self.n * (up - down)
            })
            .sum()
    }

    /// Sample onto new t-nodes, keeping θ's x-nodes.
    pub fn to_grid(&self, t_nodes: Vec<f64>) -> Result<CompactGridFunction> {
        let xs = self.theta.grid().x_nodes().to_vec();
        CompactGridFunction::from_grid(GridFunction::from_fn(t_nodes, xs, |t, x| self.value(t, x))?)
    }
}

impl SpaceTimeFn for TimeMollified {
    fn eval(&self, t: f64, x: f64) -> f64 {
        self.value(t, x)
    }
}

/// θⁿ(t,x) = ∫ θ(t, x + y/n) α(y) dy.
///
/// Each row is written as v₀ + Σ_j c_j (x − x_j)_+ with c_j the slope change
/// at node x_j, so the convolution and its first two x-derivatives are
/// closed-form sums over nodes.
#[derive(Debug, Clone)]
pub struct SpaceMollified {
    theta: CompactGridFunction,
    kernel: BumpKernel,
    n: f64,
    /// Slope changes per row, row-major like the grid values.
    kinks: Vec<f64>,
}

pub fn mollify_space(theta: &CompactGridFunction, kernel: BumpKernel, n: usize) -> Result<SpaceMollified> {
    if n == 0 {
        return Err(invalid("space mollification needs n ≥ 1"));
    }
    let g = theta.grid();
    let m = g.n_x();
    let mut kinks = Vec::with_capacity(g.n_t() * m);
    for i in 0..g.n_t() {
        for j in 0..m {
            let left = if j == 0 { 0.0 } else { g.segment_slope(i, j - 1) };
            let right = if j + 1 == m { 0.0 } else { g.segment_slope(i, j) };
            kinks.push(right - left);
        }
    }
    Ok(SpaceMollified { theta: theta.clone(), kernel, n: n as f64, kinks })
}

impl SpaceMollified {
    pub fn n(&self) -> f64 {
        self.n
    }

    fn kinks(&self, i: usize) -> &[f64] {
        let m = self.theta.grid().n_x();
        &self.kinks[i * m..(i + 1) * m]
    }

    pub fn row_value(&self, i: usize, x: f64) -> f64 {
        let g = self.theta.grid();
        let base = g.row(i)[0];
        base + self
            .kinks(i)
            .iter()
            .zip(g.x_nodes())
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, xj)| c * self.kernel.positive_part_mean(x - xj, self.n))
            .sum::<f64>()
    }

    pub fn row_d_x(&self, i: usize, x: f64) -> f64 {
        let g = self.theta.grid();
        self.kinks(i)
            .iter()
            .zip(g.x_nodes())
            .map(|(c, xj)| c * (1.0 - self.kernel.cdf(self.n * (xj - x))))
            .sum()
    }

    pub fn row_d_xx(&self, i: usize, x: f64) -> f64 {
        let g = self.theta.grid();
        self.kinks(i)
            .iter()
            .zip(g.x_nodes())
            .map(|(c, xj)| c * self.n * self.kernel.pdf(self.n * (xj - x)))
            .sum()
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.row_value(self.theta.grid().row_index(t), x)
    }

    pub fn value_left(&self, t: f64, x: f64) -> f64 {
        self.row_value(self.theta.grid().left_row_index(t), x)
    }

    pub fn d_x(&self, t: f64, x: f64) -> f64 {
        self.row_d_x(self.theta.grid().row_index(t), x)
    }

    /// θⁿ_{,2}(t⁻, x).
    pub fn d_x_left(&self, t: f64, x: f64) -> f64 {
        self.row_d_x(self.theta.grid().left_row_index(t), x)
    }

    pub fn d_xx(&self, t: f64, x: f64) -> f64 {
        self.row_d_xx(self.theta.grid().row_index(t), x)
    }

    /// x-range outside which every row is constant (zero for compact θ).
    pub fn x_support(&self) -> (f64, f64) {
        let xs = self.theta.grid().x_nodes();
        let r = self.kernel.radius() / self.n;
        (xs[0] - r, xs[xs.len() - 1] + r)
    }

    /// Sample onto new x-nodes, keeping θ's t-nodes.
    pub fn to_grid(&self, x_nodes: Vec<f64>) -> Result<CompactGridFunction> {
        let g = self.theta.grid();
        let ts = g.t_nodes().to_vec();
        CompactGridFunction::from_grid(GridFunction::from_fn(ts, x_nodes, |t, x| self.value(t, x))?)
    }
}

impl SpaceTimeFn for SpaceMollified {
    fn eval(&self, t: f64, x: f64) -> f64 {
        self.value(t, x)
    }

    fn eval_left(&self, t: f64, x: f64) -> f64 {
        self.value_left(t, x)
    }
}
