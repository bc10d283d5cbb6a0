use serde::{Deserialize, Serialize};

use super::CallSurface;
use crate::error::{invalid, Error, Result};
use crate::function_space::GridFunction;
use crate::numerics::solve_tridiagonal;
use crate::process_models::{InitialLaw, ModelSpec};

/// Space/time grid for the finite-difference solvers. Output rows are
/// stored at `t_nodes`; between them the solver takes equal sub-steps no
/// longer than `max_dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub x_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub max_dt: f64,
}

impl PdeGrid {
    pub fn uniform(x_min: f64, x_max: f64, nx: usize, horizon: f64, nt: usize, max_dt: f64) -> Self {
        PdeGrid {
            x_nodes: (0..=nx).map(|j| x_min + (x_max - x_min) * j as f64 / nx as f64).collect(),
            t_nodes: (0..=nt).map(|i| horizon * i as f64 / nt as f64).collect(),
            max_dt,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.x_nodes.len() < 3 {
            return Err(invalid("PDE grid needs at least three x-nodes"));
        }
        if !(self.max_dt > 0.0 && self.max_dt.is_finite()) {
            return Err(invalid("max_dt must be positive"));
        }
        if self.t_nodes.first() != Some(&0.0) || self.t_nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("t-nodes must start at 0 and increase strictly"));
        }
        if self.x_nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("x-nodes must increase strictly"));
        }
        Ok(())
    }

    /// Sub-step sizes between consecutive t-nodes.
    fn substeps(&self, i: usize) -> (usize, f64) {
        let span = self.t_nodes[i + 1] - self.t_nodes[i];
        let k = (span / self.max_dt).ceil().max(1.0) as usize;
        (k, span / k as f64)
    }
}

/// Coefficients of the three-point second difference on a nonuniform grid:
/// D²u_j = a_j u_{j−1} − (a_j + c_j) u_j + c_j u_{j+1}.
fn second_difference(xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = xs.len();
    let mut a = vec![0.0; m];
    let mut c = vec![0.0; m];
    for j in 1..m - 1 {
        let (hm, hp) = (xs[j] - xs[j - 1], xs[j + 1] - xs[j]);
        a[j] = 2.0 / (hm * (hm + hp));
        c[j] = 2.0 / (hp * (hm + hp));
    }
    (a, c)
}

/// One fully implicit step u_new − dt·½σ²(t,x)·D²u_new = u_old with
/// Dirichlet values at both ends.
fn implicit_step(
    xs: &[f64],
    a: &[f64],
    c: &[f64],
    half_var: &[f64],
    dt: f64,
    u_old: &[f64],
    left: f64,
    right: f64,
) -> Result<Vec<f64>> {
    let m = xs.len();
    let mut lower = vec![0.0; m];
    let mut diag = vec![1.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = u_old.to_vec();
    for j in 1..m - 1 {
        let k = dt * half_var[j];
        lower[j] = -k * a[j];
        upper[j] = -k * c[j];
        diag[j] = 1.0 + k * (a[j] + c[j]);
    }
    rhs[0] = left;
    rhs[m - 1] = right;
    solve_tridiagonal(&lower, &diag, &upper, &rhs)
}

fn max_slope(xs: &[f64], values: &[f64]) -> f64 {
    values
        .chunks(xs.len())
        .flat_map(|row| row.windows(2).zip(xs.windows(2)).map(|(v, x)| ((v[1] - v[0]) / (x[1] - x[0])).abs()))
        .fold(0.0, f64::max)
}

fn half_variance(model: &ModelSpec, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter()
        .map(|&x| {
            let s = model.vol(t, x);
            if !s.is_finite() {
                return Err(Error::NonFinite { what: "volatility", t, x });
            }
            Ok(0.5 * s * s)
        })
        .collect()
}

/// Reject models the heat-type solvers cannot represent: jumps or a
/// nonzero drift anywhere on the grid.
fn require_martingale_diffusion(model: &ModelSpec, grid: &PdeGrid) -> Result<f64> {
    model.validate()?;
    if model.has_jumps() {
        return Err(invalid(format!("model `{}` has jumps; the PDE solvers need a continuous diffusion", model.tag)));
    }
    let mut max_sigma = 0.0f64;
    for &t in &grid.t_nodes {
        for &x in &grid.x_nodes {
            if model.drift(t, x) != 0.0 {
                return Err(invalid(format!("model `{}` has nonzero drift at t={t}, x={x}", model.tag)));
            }
            max_sigma = max_sigma.max(model.vol(t, x).abs());
        }
    }
    Ok(max_sigma)
}

/// Forward equation ∂C/∂t = ½σ²∂²C/∂x² from C(0,x) = E[(X₀ − x)_+].
///
/// Boundary values are the call asymptotics C = E[X₀] − x at the left edge
/// and 0 at the right edge; the grid must extend six standard deviations of
/// X_T beyond the initial law or the run is refused.
pub fn call_surface_forward_pde(model: &ModelSpec, grid: &PdeGrid) -> Result<CallSurface> {
    grid.validate()?;
    let max_sigma = require_martingale_diffusion(model, grid)?;
    let xs = &grid.x_nodes;
    let horizon = *grid.t_nodes.last().unwrap();
    let (m0, sd0) = match model.initial {
        InitialLaw::Point { x0 } => (x0, 0.0),
        InitialLaw::Normal { mean, sd } => (mean, sd),
    };
    let reach = 6.0 * (sd0 * sd0 + max_sigma * max_sigma * horizon).sqrt();
    if xs[0] > m0 - reach || xs[xs.len() - 1] < m0 + reach {
        return Err(Error::Scheme {
            reason: format!("x-range [{}, {}] does not contain E[X₀] ± 6 sd(X_T)", xs[0], xs[xs.len() - 1]),
            hint: format!("x-range [{}, {}]", m0 - reach, m0 + reach),
        });
    }
    let initial = |x: f64| crate::numerics::gaussian_call(m0, sd0, x);
    let (a, c) = second_difference(xs);
    let left = m0 - xs[0];
    let mut u: Vec<f64> = xs.iter().map(|&x| initial(x)).collect();
    let mut values = u.clone();
    for i in 0..grid.t_nodes.len() - 1 {
        let (k, dt) = grid.substeps(i);
        for s in 1..=k {
            let t = grid.t_nodes[i] + dt * s as f64;
            let hv = half_variance(model, t, xs)?;
            u = implicit_step(xs, &a, &c, &hv, dt, &u, left, 0.0)?;
        }
        values.extend_from_slice(&u);
    }
    let n_t = grid.t_nodes.len();
    let lip = max_slope(xs, &values);
    let g = GridFunction::new(grid.t_nodes.clone(), xs.clone(), values, lip)?;
    CallSurface::from_grid(g, vec![m0; n_t], Some(vec![0.0; n_t]))
}

/// f(t,x) = E[g(X_T) | X_t = x] from the backward equation, with the
/// properties expected of it measured rather than assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSurface {
    pub grid: GridFunction,
    /// Largest drop of a slope between neighbouring x-segments.
    pub convexity_violation: f64,
    /// Largest increase of f in t at fixed x.
    pub monotonicity_violation: f64,
}

impl ConditionalSurface {
    pub fn check(&self, tol: f64) -> Result<()> {
        if self.convexity_violation > tol {
            return Err(Error::Property(format!("f is not convex in x (violation {:e})", self.convexity_violation)));
        }
        if self.monotonicity_violation > tol {
            return Err(Error::Property(format!(
                "f increases in t (violation {:e})",
                self.monotonicity_violation
            )));
        }
        Ok(())
    }
}

/// Solve ∂f/∂t + ½σ²∂²f/∂x² = 0 backward from f(T,·) = g. The edges keep
/// the payoff value, which is exact where g is affine beyond the grid.
pub fn conditional_expectation_surface(
    model: &ModelSpec,
    g: &dyn Fn(f64) -> f64,
    g_lipschitz: f64,
    grid: &PdeGrid,
) -> Result<ConditionalSurface> {
    grid.validate()?;
    require_martingale_diffusion(model, grid)?;
    let xs = &grid.x_nodes;
    let m = xs.len();
    let n_t = grid.t_nodes.len();
    let payoff: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    for (w, v) in xs.windows(2).zip(payoff.windows(2)) {
        let s = (v[1] - v[0]) / (w[1] - w[0]);
        if s.abs() > g_lipschitz * (1.0 + 1e-12) {
            return Err(invalid(format!("payoff slope {s} exceeds its declared Lipschitz bound {g_lipschitz}")));
        }
    }
    let (a, c) = second_difference(xs);
    let mut rows = vec![Vec::new(); n_t];
    rows[n_t - 1] = payoff.clone();
    let mut u = payoff.clone();
    for i in (0..n_t - 1).rev() {
        let (k, dt) = grid.substeps(i);
        for s in (0..k).rev() {
            let t = grid.t_nodes[i] + dt * s as f64;
            let hv = half_variance(model, t, xs)?;
            u = implicit_step(xs, &a, &c, &hv, dt, &u, payoff[0], payoff[m - 1])?;
        }
        rows[i] = u.clone();
    }
    let values: Vec<f64> = rows.concat();
    let mut convexity_violation = 0.0f64;
    let mut monotonicity_violation = 0.0f64;
    for i in 0..n_t {
        let r = &values[i * m..(i + 1) * m];
        let slopes: Vec<f64> = (0..m - 1).map(|j| (r[j + 1] - r[j]) / (xs[j + 1] - xs[j])).collect();
        for w in slopes.windows(2) {
            convexity_violation = convexity_violation.max(w[0] - w[1]);
        }
        if i + 1 < n_t {
            for j in 0..m {
                monotonicity_violation = monotonicity_violation.max(values[(i + 1) * m + j] - r[j]);
            }
        }
    }
    let lip = max_slope(xs, &values);
    let grid = GridFunction::new(grid.t_nodes.clone(), xs.clone(), values, lip)?;
    Ok(ConditionalSurface { grid, convexity_violation, monotonicity_violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::CallOracle;
    use crate::numerics::{norm_cdf, norm_pdf};

    #[test]
    fn forward_pde_matches_gaussian_closed_form() {
        let grid = PdeGrid::uniform(-7.0, 7.0, 560, 1.0, 10, 2e-4);
        let c = call_surface_forward_pde(&ModelSpec::brownian(1.0), &grid).unwrap();
        let o = CallOracle::brownian();
        for (i, &t) in grid.t_nodes.iter().enumerate().skip(1) {
            for (j, &x) in grid.x_nodes.iter().enumerate() {
                let exact = o.call(t, x);
                // Interior: within two standard deviations of the law of X_t.
                if x.abs() <= 2.0 * t.sqrt() {
                    let rel = (c.grid.at(i, j) - exact).abs() / exact;
                    assert!(rel < 0.01, "t={t} x={x} rel={rel}");
                }
            }
        }
        assert!(c.check_invariants(1e-10).is_empty());
    }

    #[test]
    fn zero_volatility_freezes_the_surface() {
        let m = ModelSpec::new("still", 1.0);
        let grid = PdeGrid::uniform(-3.0, 3.0, 60, 1.0, 4, 0.05);
        let c = call_surface_forward_pde(&m, &grid).unwrap();
        for i in 1..c.grid.n_t() {
            assert_eq!(c.grid.row(i), c.grid.row(0));
        }
    }

    #[test]
    fn rejects_jumps_drift_and_narrow_grids() {
        let grid = PdeGrid::uniform(-6.0, 6.0, 60, 1.0, 4, 0.05);
        assert!(call_surface_forward_pde(&ModelSpec::jump_diffusion(1.0, 0.5, 1.0), &grid).is_err());
        assert!(call_surface_forward_pde(&ModelSpec::drifted_brownian(1.0, 1.0), &grid).is_err());
        let narrow = PdeGrid::uniform(-1.0, 1.0, 60, 1.0, 4, 0.05);
        match call_surface_forward_pde(&ModelSpec::brownian(1.0), &narrow) {
            Err(Error::Scheme { hint, .. }) => assert!(hint.contains("-6")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn backward_identity_and_constant_payoffs_are_preserved() {
        let grid = PdeGrid::uniform(-4.0, 4.0, 80, 1.0, 5, 0.01);
        let m = ModelSpec::tanh_local_vol(1.0);
        let f = conditional_expectation_surface(&m, &|x| x, 1.0, &grid).unwrap();
        for (k, v) in f.grid.values().iter().enumerate() {
            let x = grid.x_nodes[k % 81];
            assert!((v - x).abs() < 1e-12);
        }
        let f = conditional_expectation_surface(&m, &|_| 2.0, 0.0, &grid).unwrap();
        assert!(f.grid.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn backward_call_matches_gaussian_formula() {
        let k = 0.3;
        let grid = PdeGrid::uniform(-6.0, 6.0, 480, 1.0, 10, 2e-4);
        let f = conditional_expectation_surface(&ModelSpec::brownian(1.0), &|x| (x - k).max(0.0), 1.0, &grid).unwrap();
        f.check(1e-12).unwrap();
        for (i, &t) in grid.t_nodes.iter().enumerate().take(9) {
            let s = (1.0 - t).sqrt();
            for (j, &x) in grid.x_nodes.iter().enumerate() {
                let exact = s * norm_pdf((x - k) / s) + (x - k) * norm_cdf((x - k) / s);
                if (x - k).abs() <= 2.0 * s {
                    let rel = (f.grid.at(i, j) - exact).abs() / exact;
                    assert!(rel < 0.01, "t={t} x={x} rel={rel}");
                }
            }
        }
    }
}
