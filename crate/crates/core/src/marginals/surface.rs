use serde::{Deserialize, Serialize};

use super::convex_projection;
use crate::error::{invalid, Result};
use crate::exec::{pairwise_sum, Exec, McEstimate};
use crate::function_space::GridFunction;
use crate::process_models::PathEnsemble;

/// C(t,x) on a grid together with what is known about E[X_t] and the
/// conditional variation of X.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallSurface {
    pub grid: GridFunction,
    /// E[X_t] at each t-node.
    pub mean_curve: Vec<f64>,
    /// Var_X(t) per t-node when known or bounded; zero for martingales.
    pub adjusted_variation: Option<Vec<f64>>,
    /// Raw Monte-Carlo node estimates before projection (row-major).
    pub raw: Option<Vec<McEstimate>>,
    /// Number of paths with X_t > x behind each raw estimate.
    pub raw_support: Option<Vec<usize>>,
    /// Largest change made by the convex projection.
    pub projection_distance: f64,
    /// Largest distance between a requested t-node and the partition node
    /// used for it.
    pub snap_offset: f64,
}

impl CallSurface {
    pub fn from_grid(grid: GridFunction, mean_curve: Vec<f64>, adjusted_variation: Option<Vec<f64>>) -> Result<Self> {
        if mean_curve.len() != grid.n_t() {
            return Err(invalid("mean curve needs one entry per t-node"));
        }
        if let Some(v) = &adjusted_variation {
            if v.len() != grid.n_t() {
                return Err(invalid("variation curve needs one entry per t-node"));
            }
        }
        Ok(CallSurface { grid, mean_curve, adjusted_variation, raw: None, raw_support: None, projection_distance: 0.0, snap_offset: 0.0 })
    }

    /// Sample a closed form onto a grid.
    pub fn from_fn(
        t_nodes: Vec<f64>,
        x_nodes: Vec<f64>,
        call: impl Fn(f64, f64) -> f64,
        mean: impl Fn(f64) -> f64,
        adjusted_variation: Option<Vec<f64>>,
    ) -> Result<Self> {
        let mean_curve = t_nodes.iter().map(|&t| mean(t)).collect();
        let grid = GridFunction::from_fn(t_nodes, x_nodes, call)?;
        CallSurface::from_grid(grid, mean_curve, adjusted_variation)
    }

    pub fn declare_variation(mut self, v: Vec<f64>) -> Result<Self> {
        if v.len() != self.grid.n_t() {
            return Err(invalid("variation curve needs one entry per t-node"));
        }
        self.adjusted_variation = Some(v);
        Ok(self)
    }

    pub fn declare_martingale(self) -> Self {
        let n = self.grid.n_t();
        self.declare_variation(vec![0.0; n]).expect("length matches")
    }

    /// C(t,x) with the call-function tails: slope −1 below the grid and
    /// constant above it.
    pub fn value(&self, t: f64, x: f64) -> f64 {
        let xs = self.grid.x_nodes();
        let i = self.grid.row_index(t);
        if x < xs[0] {
            self.grid.row(i)[0] + (xs[0] - x)
        } else {
            self.grid.row_value(i, x)
        }
    }

    /// Structural invariants: convexity, slopes in [−1,0], and
    /// C + Var_X nondecreasing in t when Var_X is known. Returns the list of
    /// violations larger than `tol`.
    pub fn check_invariants(&self, tol: f64) -> Vec<String> {
        let g = &self.grid;
        let mut out = Vec::new();
        for i in 0..g.n_t() {
            let mut prev = f64::NEG_INFINITY;
            for j in 0..g.n_x().saturating_sub(1) {
                let s = g.segment_slope(i, j);
                if !(-1.0 - tol..=tol).contains(&s) {
                    out.push(format!("slope {s} outside [-1,0] at t={}, x={}", g.t_nodes()[i], g.x_nodes()[j]));
                }
                if s < prev - tol {
                    out.push(format!("convexity fails at t={}, x={}", g.t_nodes()[i], g.x_nodes()[j]));
                }
                prev = s;
            }
        }
        if let Some(v) = &self.adjusted_variation {
            for i in 1..g.n_t() {
                for j in 0..g.n_x() {
                    let drop = (g.at(i - 1, j) + v[i - 1]) - (g.at(i, j) + v[i]);
                    if drop > tol {
                        out.push(format!(
                            "C + Var_X decreases by {drop} between t={} and t={} at x={}",
                            g.t_nodes()[i - 1],
                            g.t_nodes()[i],
                            g.x_nodes()[j]
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Monte-Carlo call surface, projected onto convex slices with slopes in
/// [−1, 0].
///
/// Each requested t is snapped to the nearest partition node; the largest
/// offset is reported in [`CallSurface::snap_offset`].
pub fn estimate_call_surface(
    ensemble: &PathEnsemble,
    x_nodes: Vec<f64>,
    t_nodes: Vec<f64>,
    exec: Exec,
) -> Result<CallSurface> {
    let n = ensemble.n_paths();
    if n == 0 {
        return Err(invalid("cannot estimate a call surface from an empty ensemble"));
    }
    let part = ensemble.partition();
    let mut snap_offset = 0.0f64;
    let snapped: Vec<usize> = t_nodes
        .iter()
        .map(|&t| {
            let k = part.nearest_node(t);
            snap_offset = snap_offset.max((part.times()[k] - t).abs());
            k
        })
        .collect();

    let rows: Vec<(Vec<(McEstimate, usize)>, f64)> = exec.map(snapped.len(), |i| {
        let mut col = ensemble.column(snapped[i]);
        col.sort_by(f64::total_cmp);
        let mean_x = pairwise_sum(&col) / n as f64;
        let est = x_nodes
            .iter()
            .map(|&x| {
                let start = col.partition_point(|&v| v <= x);
                let tail: Vec<f64> = col[start..].iter().map(|v| v - x).collect();
                let mean = pairwise_sum(&tail) / n as f64;
                let dev: Vec<f64> = tail.iter().map(|v| (v - mean) * (v - mean)).collect();
                let ss = pairwise_sum(&dev) + (n - tail.len()) as f64 * mean * mean;
                let se = if n > 1 { (ss / (n - 1) as f64 / n as f64).sqrt() } else { 0.0 };
                (McEstimate { mean, se, n }, tail.len())
            })
            .collect();
        (est, mean_x)
    });

    let mut values = Vec::with_capacity(t_nodes.len() * x_nodes.len());
    let mut raw = Vec::with_capacity(values.capacity());
    let mut mean_curve = Vec::with_capacity(t_nodes.len());
    let mut support = Vec::with_capacity(values.capacity());
    let mut dist = 0.0f64;
    for (est, m) in rows {
        let y: Vec<f64> = est.iter().map(|e| e.0.mean).collect();
        let (proj, d) = convex_projection(&x_nodes, &y, -1.0, 0.0);
        dist = dist.max(d);
        values.extend(proj);
        raw.extend(est.iter().map(|e| e.0));
        support.extend(est.iter().map(|e| e.1));
        mean_curve.push(m);
    }
    let grid = GridFunction::new(t_nodes, x_nodes, values, 1.0)?;
    Ok(CallSurface {
        grid,
        mean_curve,
        adjusted_variation: None,
        raw: Some(raw),
        raw_support: Some(support),
        projection_distance: dist,
        snap_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::CallOracle;
    use crate::process_models::{simulate, ModelSpec, Partition};

    fn xs() -> Vec<f64> {
        (0..=40).map(|j| -3.0 + 0.15 * j as f64).collect()
    }

    #[test]
    fn degenerate_law_gives_exact_hockey_stick() {
        let m = ModelSpec::pure_drift(0.0, 1.0).with_initial(crate::process_models::InitialLaw::Point { x0: 0.45 });
        let e = simulate(&m, &Partition::uniform(1.0, 4).unwrap(), 50, 1).unwrap();
        let c = estimate_call_surface(&e, xs(), vec![0.0, 0.5, 1.0], Exec::default()).unwrap();
        for i in 0..3 {
            for (j, &x) in xs().iter().enumerate() {
                assert!((c.grid.at(i, j) - (0.45 - x).max(0.0)).abs() < 1e-12);
            }
        }
        assert!(c.projection_distance < 1e-12);
    }

    #[test]
    fn brownian_surface_matches_gaussian_oracle() {
        let e = simulate(&ModelSpec::brownian(1.0), &Partition::uniform(1.0, 20).unwrap(), 20_000, 11).unwrap();
        let c = estimate_call_surface(&e, xs(), vec![0.0, 0.25, 0.5, 1.0], Exec::default()).unwrap();
        let raw = c.raw.clone().unwrap();
        let support = c.raw_support.clone().unwrap();
        let o = CallOracle::brownian();
        for (i, &t) in [0.0, 0.25, 0.5, 1.0].iter().enumerate() {
            for (j, &x) in xs().iter().enumerate() {
                let k = i * xs().len() + j;
                // Nodes backed by too few exceedances have no usable SE.
                if support[k] < 50 {
                    continue;
                }
                let r = raw[k];
                assert!((r.mean - o.call(t, x)).abs() <= 4.0 * r.se + 1e-12, "t={t} x={x} {r:?}");
            }
        }
        assert!(c.check_invariants(1e-12).is_empty());
        // Jensen: the raw surface of a martingale rises in t up to noise.
        let c = c.declare_martingale();
        for i in 1..4 {
            for j in 0..xs().len() {
                let (a, b) = (raw[(i - 1) * xs().len() + j], raw[i * xs().len() + j]);
                assert!(b.mean >= a.mean - 3.0 * a.combined_se(&b));
            }
        }
        assert_eq!(c.adjusted_variation.unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn tails_follow_call_asymptotics() {
        let o = CallOracle::brownian();
        let c = CallSurface::from_fn(vec![0.0, 1.0], xs(), |t, x| o.call(t, x), |t| o.mean(t), None).unwrap();
        assert!((c.value(1.0, -10.0) + (-10.0) - 0.0).abs() < 1e-3);
        assert!(c.value(1.0, 10.0) < 1e-3);
    }

    #[test]
    fn empty_ensemble_is_rejected() {
        let e = PathEnsemble::new(Partition::uniform(1.0, 2).unwrap(), vec![], vec![], 0, "bm", 0).unwrap();
        assert!(estimate_call_surface(&e, xs(), vec![0.0], Exec::default()).is_err());
    }
}
