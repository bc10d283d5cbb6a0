use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::{Exec, McEstimate};
use crate::function_space::{eval_on_path, GridFunction, Side};
use crate::process_models::PathEnsemble;

/// Per-path values of both sides of the quadratic-variation identity at
/// each coarsening factor of the simulation mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSamples {
    pub factors: Vec<usize>,
    pub meshes: Vec<f64>,
    /// Σ_k (Δ_k Y)², one vector per factor.
    pub lhs: Vec<Vec<f64>>,
    /// Σ_k f_{,2}(t_k, X_{t_k})² (Δ_k X^c)² + Σ (ΔY)², one vector per factor.
    pub rhs: Vec<Vec<f64>>,
}

impl DirichletSamples {
    /// Append the paths of `other` (same factors).
    pub fn merge(&mut self, other: DirichletSamples) -> Result<()> {
        if self.factors != other.factors {
            return Err(invalid("cannot merge samples taken at different meshes"));
        }
        for (a, b) in self.lhs.iter_mut().zip(other.lhs) {
            a.extend(b);
        }
        for (a, b) in self.rhs.iter_mut().zip(other.rhs) {
            a.extend(b);
        }
        Ok(())
    }

    /// Summarize. With `target`, errors are measured against that exact value
    /// of E[[f(·,X)]_T]; otherwise against the right side.
    pub fn report(&self, target: Option<f64>) -> DirichletReport {
        let rows: Vec<DirichletRow> = (0..self.factors.len())
            .map(|i| {
                let lhs = McEstimate::from_samples(&self.lhs[i]);
                let rhs = McEstimate::from_samples(&self.rhs[i]);
                let diff: Vec<f64> = self.lhs[i].iter().zip(&self.rhs[i]).map(|(a, b)| a - b).collect();
                let diff = McEstimate::from_samples(&diff);
                let reference = target.unwrap_or(rhs.mean);
                let rel_error = if reference == 0.0 {
                    (lhs.mean - reference).abs()
                } else {
                    ((lhs.mean - reference) / reference).abs()
                };
                DirichletRow { factor: self.factors[i], mesh: self.meshes[i], lhs, rhs, diff, rel_error }
            })
            .collect();
        let monotone_decay = rows.windows(2).all(|w| w[1].rel_error <= w[0].rel_error);
        DirichletReport { target, rows, monotone_decay }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletRow {
    pub factor: usize,
    pub mesh: f64,
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    /// Paired lhs − rhs.
    pub diff: McEstimate,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletReport {
    pub target: Option<f64>,
    pub rows: Vec<DirichletRow>,
    /// Relative error non-increasing along the rows.
    pub monotone_decay: bool,
}

/// Both sides of [f(·,X)]_T = ∫f_{,2}² d[X]^c + Σ(Δf(s,X_s))² along the
/// ensemble nodes coarsened by each factor (coarsest first). The slope is
/// the right derivative of f(t_k, ·) at X_{t_k}; the jump sum includes both
/// jumps of X and time-jumps of f.
pub fn dirichlet_qv_samples(
    f: &GridFunction,
    ensemble: &PathEnsemble,
    factors: &[usize],
    exec: Exec,
) -> Result<DirichletSamples> {
    if factors.is_empty() || factors.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("coarsening factors must be non-empty and strictly decreasing"));
    }
    let partition = ensemble.partition();
    let mut coarse = Vec::with_capacity(factors.len());
    for &factor in factors {
        coarse.push(partition.coarsen(factor)?);
    }
    let meshes = coarse.iter().map(|(p, _)| p.mesh()).collect();
    let per_path = exec.map(ensemble.n_paths(), |p| {
        let path = ensemble.path(p);
        let yv = eval_on_path(f, &path);
        let jump_sq: f64 = yv.events.iter().map(|e| (e.y_post - e.y_pre).powi(2)).sum();
        let xc = path.continuous_part();
        coarse
            .iter()
            .map(|(_, idx)| {
                let mut lhs = 0.0;
                let mut rhs = 0.0;
                for w in idx.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    lhs += (yv.node_values[b] - yv.node_values[a]).powi(2);
                    let slope = f.one_sided_x_derivative(path.times[a], path.values[a], Side::Right);
                    rhs += (slope * (xc[b] - xc[a])).powi(2);
                }
                (lhs, rhs + jump_sq)
            })
            .collect::<Vec<_>>()
    });
    let mut lhs = vec![Vec::with_capacity(ensemble.n_paths()); factors.len()];
    let mut rhs = vec![Vec::with_capacity(ensemble.n_paths()); factors.len()];
    for row in per_path {
        for (i, (l, r)) in row.into_iter().enumerate() {
            lhs[i].push(l);
            rhs[i].push(r);
        }
    }
    Ok(DirichletSamples { factors: factors.to_vec(), meshes, lhs, rhs })
}

/// [`dirichlet_qv_samples`] summarized in one call.
pub fn dirichlet_qv_check(
    f: &GridFunction,
    ensemble: &PathEnsemble,
    factors: &[usize],
    target: Option<f64>,
    exec: Exec,
) -> Result<DirichletReport> {
    Ok(dirichlet_qv_samples(f, ensemble, factors, exec)?.report(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_models::{simulate, simulate_range, ModelSpec, Partition};

    fn identity_grid() -> GridFunction {
        GridFunction::time_independent(vec![-50.0, 50.0], vec![-50.0, 50.0]).unwrap()
    }

    #[test]
    fn identity_is_exact_for_continuous_paths() {
        let p = Partition::uniform(1.0, 64).unwrap();
        let e = simulate(&ModelSpec::brownian(1.0), &p, 20, 1).unwrap();
        let s = dirichlet_qv_samples(&identity_grid(), &e, &[4, 2, 1], Exec::default()).unwrap();
        for i in 0..3 {
            for (l, r) in s.lhs[i].iter().zip(&s.rhs[i]) {
                assert!((l - r).abs() < 1e-12);
            }
        }
        let rep = s.report(None);
        assert!(rep.rows.iter().all(|r| r.rel_error < 1e-12));
    }

    #[test]
    fn smooth_deterministic_path_has_vanishing_qv() {
        let h = 1.0 / 100.0;
        let p = Partition::uniform(1.0, 100).unwrap();
        let m = ModelSpec::pure_drift(1.0, 1.0);
        let e = simulate(&m, &p, 2, 1).unwrap();
        let f = GridFunction::time_independent(vec![-1.0, 0.5, 3.0], vec![1.0, 0.0, 2.0]).unwrap();
        let s = dirichlet_qv_samples(&f, &e, &[1], Exec::default()).unwrap();
        let slope = f.max_abs_slope();
        assert!(s.lhs[0].iter().all(|&l| l <= h * slope * slope + 1e-12));
        assert!(s.rhs[0].iter().all(|&r| r <= h * slope * slope + 1e-12));
    }

    #[test]
    fn rejects_non_decreasing_factors() {
        let p = Partition::uniform(1.0, 8).unwrap();
        let e = simulate(&ModelSpec::brownian(1.0), &p, 2, 1).unwrap();
        assert!(dirichlet_qv_samples(&identity_grid(), &e, &[1, 2], Exec::default()).is_err());
    }

    #[test]
    fn jumps_enter_the_right_side() {
        let p = Partition::uniform(1.0, 200).unwrap();
        let e = simulate(&ModelSpec::jump_diffusion(2.0, 0.5, 1.0), &p, 4000, 3).unwrap();
        let f = GridFunction::time_independent(vec![-3.0, 0.0, 3.0], vec![1.0, 0.0, 2.0]).unwrap();
        let rep = dirichlet_qv_check(&f, &e, &[4, 1], None, Exec::default()).unwrap();
        let last = &rep.rows[1];
        assert!(last.diff.mean.abs() < 3.0 * last.diff.se + 0.02, "{last:?}");
    }

    #[test]
    fn clipped_absolute_value_on_brownian_motion() {
        // |x| clipped at ±6: slope² = 1 off a null set, so E[[f(X)]_1] = 1 up
        // to the exit probability.
        let f = GridFunction::time_independent(vec![-6.0, 0.0, 6.0], vec![6.0, 0.0, 6.0]).unwrap();
        let p = Partition::uniform(1.0, 2048).unwrap();
        let m = ModelSpec::brownian(1.0);
        let mut samples: Option<DirichletSamples> = None;
        for chunk in 0..4 {
            let e = simulate_range(&m, &p, chunk * 250..(chunk + 1) * 250, 21, Exec::default()).unwrap();
            let s = dirichlet_qv_samples(&f, &e, &[8, 4, 2, 1], Exec::default()).unwrap();
            match samples.as_mut() {
                Some(acc) => acc.merge(s).unwrap(),
                None => samples = Some(s),
            }
        }
        let rep = samples.unwrap().report(Some(1.0));
        assert!(rep.monotone_decay, "{rep:?}");
        assert!(rep.rows[3].rel_error < 0.05);
    }
}
