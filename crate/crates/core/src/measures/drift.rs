use serde::{Deserialize, Serialize};

use super::refine::{sample_rows, union_nodes, union_times};
use super::{jump_term, jump_term_bound, mu_bilinear_terms, BilinearTerms};
use crate::error::{invalid, Error, Result};
use crate::exec::{Exec, McEstimate};
use crate::function_space::{CompactGridFunction, GridFunction, SpaceTimeFn};
use crate::marginals::CallSurface;
use crate::process_models::{ModelSpec, PathEnsemble, PathView};

fn check_tag(ensemble: &PathEnsemble, model: &ModelSpec) -> Result<()> {
    if ensemble.model_tag != model.tag {
        return Err(Error::ModelMismatch { ensemble: ensemble.model_tag.clone(), model: model.tag.clone() });
    }
    Ok(())
}

/// ∫ θ(t, X_{t−}) dA_t along one path with A_t = ∫ b dt, left-point on each
/// jump-free segment.
fn path_drift(path: &PathView<'_>, model: &ModelSpec, theta: &dyn SpaceTimeFn) -> f64 {
    path.segments()
        .iter()
        .map(|s| {
            if s.dt() == 0.0 {
                0.0
            } else {
                theta.eval(s.t0, s.x_left) * model.drift(s.t0, s.x_left) * s.dt()
            }
        })
        .sum()
}

/// Per-path samples of ∫ θ(t, X_{t−}) dA_t.
pub fn drift_measure_samples(
    ensemble: &PathEnsemble,
    model: &ModelSpec,
    theta: &dyn SpaceTimeFn,
    exec: Exec,
) -> Result<Vec<f64>> {
    check_tag(ensemble, model)?;
    Ok(exec.map(ensemble.n_paths(), |p| path_drift(&ensemble.path(p), model, theta)))
}

/// μ_X(θ) = E[∫ θ(t, X_{t−}) dA_t] with its Monte-Carlo standard error.
pub fn drift_measure_x(
    ensemble: &PathEnsemble,
    model: &ModelSpec,
    theta: &dyn SpaceTimeFn,
    exec: Exec,
) -> Result<McEstimate> {
    Ok(McEstimate::from_samples(&drift_measure_samples(ensemble, model, theta, exec)?))
}

/// Φ(t,x) = ∫_{−∞}^x θ_{,2}(t,y) f_{,2}(t,y) dy as a grid function.
///
/// Both slopes are constant on each cell of the common x-refinement, so Φ is
/// piecewise linear in x and exact. Rows are the right-continuous rows of θ
/// and f; they agree with the left-limit rows θ⁻, f⁻ off the t-nodes, which
/// is all an absolutely continuous dA_t sees.
pub fn inner_antiderivative(theta: &CompactGridFunction, f: &GridFunction) -> Result<GridFunction> {
    let th = theta.grid();
    let txs = th.x_nodes();
    let xs = union_nodes(&[f.x_nodes(), txs], txs[0], txs[txs.len() - 1]);
    let ts = union_times(&[f.t_nodes(), th.t_nodes()]);
    let fv = sample_rows(f, &ts, &xs);
    let tv = sample_rows(th, &ts, &xs);
    let mut values = Vec::with_capacity(ts.len() * xs.len());
    for k in 0..ts.len() {
        let mut acc = 0.0;
        values.push(0.0);
        for c in 0..xs.len() - 1 {
            let len = xs[c + 1] - xs[c];
            acc += (tv[k][c + 1] - tv[k][c]) * (fv[k][c + 1] - fv[k][c]) / len;
            values.push(acc);
        }
    }
    let lip = th.lipschitz_x() * f.lipschitz_x();
    let probe = GridFunction::new(ts.clone(), xs.clone(), values.clone(), f64::INFINITY)?;
    GridFunction::new(ts, xs, values, lip.max(probe.max_abs_slope()))
}

/// μ̃_f^X(θ) and its three addends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuTilde {
    pub value: f64,
    /// Standard error of `value` (from the per-path drift + jump samples;
    /// the bilinear term is deterministic given C).
    pub se: f64,
    pub bilinear: BilinearTerms,
    pub drift: McEstimate,
    pub jump: McEstimate,
    /// E[Σ |J_t|], finite by the jump integrability estimate.
    pub jump_abs: McEstimate,
    /// Paths where Σ|J_t| exceeded the per-jump bound sum.
    pub bound_violations: usize,
    /// Per-path drift + jump samples, for paired comparisons.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// μ̃_f^X(θ) = μ_[f,C](θ) + μ_X(Φ) + E[Σ_t J_t^X(θ, f)] with Φ from
/// [`inner_antiderivative`].
pub fn mu_tilde(
    f: &GridFunction,
    theta: &CompactGridFunction,
    c: &CallSurface,
    ensemble: &PathEnsemble,
    model: &ModelSpec,
    exec: Exec,
) -> Result<MuTilde> {
    check_tag(ensemble, model)?;
    let cx = c.grid.x_nodes();
    let s = theta.support();
    if cx[0] > s.x_a || cx[cx.len() - 1] < s.x_b {
        return Err(invalid(format!(
            "call surface x-range [{}, {}] does not cover the θ support [{}, {}]",
            cx[0],
            cx[cx.len() - 1],
            s.x_a,
            s.x_b
        )));
    }
    let bilinear = mu_bilinear_terms(f, &c.grid, theta);
    let phi = inner_antiderivative(theta, f)?;
    let per_path: Vec<(f64, f64, f64, bool)> = exec.map(ensemble.n_paths(), |p| {
        let path = ensemble.path(p);
        let d = path_drift(&path, model, &phi);
        let (mut j, mut j_abs, mut bound) = (0.0, 0.0, 0.0);
        for jr in path.jumps {
            let v = jump_term(theta, f, jr.t, jr.pre, jr.post);
            j += v;
            j_abs += v.abs();
            bound += jump_term_bound(theta, f, jr.t, jr.pre, jr.post);
        }
        (d, j, j_abs, j_abs > bound * (1.0 + 1e-12) + 1e-300)
    });
    let drift: Vec<f64> = per_path.iter().map(|r| r.0).collect();
    let jump: Vec<f64> = per_path.iter().map(|r| r.1).collect();
    let jump_abs: Vec<f64> = per_path.iter().map(|r| r.2).collect();
    let samples: Vec<f64> = per_path.iter().map(|r| r.0 + r.1).collect();
    let total = McEstimate::from_samples(&samples);
    Ok(MuTilde {
        value: bilinear.value + total.mean,
        se: total.se,
        bilinear,
        drift: McEstimate::from_samples(&drift),
        jump: McEstimate::from_samples(&jump),
        jump_abs: McEstimate::from_samples(&jump_abs),
        bound_violations: per_path.iter().filter(|r| r.3).count(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::CallOracle;
    use crate::process_models::{simulate, Partition};

    fn xs() -> Vec<f64> {
        (0..=40).map(|j| -4.0 + 0.2 * j as f64).collect()
    }

    fn box_theta(t_a: f64, t_b: f64, half_width: f64) -> CompactGridFunction {
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let g = GridFunction::from_fn(ts, xs(), |t, x| {
            if t >= t_a && t < t_b {
                (half_width - x.abs()).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .unwrap();
        CompactGridFunction::from_grid(g).unwrap()
    }

    #[test]
    fn zero_drift_gives_exact_zero() {
        let m = ModelSpec::brownian(1.0);
        let e = simulate(&m, &Partition::uniform(1.0, 50).unwrap(), 200, 3).unwrap();
        let th = box_theta(0.2, 0.8, 2.0);
        let est = drift_measure_x(&e, &m, th.grid(), Exec::default()).unwrap();
        assert_eq!((est.mean, est.se), (0.0, 0.0));
    }

    #[test]
    fn unit_drift_on_wide_box_gives_one() {
        let m = ModelSpec::drifted_brownian(1.0, 1.0);
        let e = simulate(&m, &Partition::uniform(1.0, 100).unwrap(), 4000, 8).unwrap();
        let theta = |t: f64, x: f64| if t < 1.0 && x.abs() <= 10.0 { 1.0 } else { 0.0 };
        let est = drift_measure_x(&e, &m, &theta, Exec::default()).unwrap();
        // Every path stays inside ±10 here, so the sum is exactly Σ Δt = 1.
        assert!((est.mean - 1.0).abs() <= 3.0 * est.se + 1e-12);
    }

    #[test]
    fn drift_measure_is_linear_in_theta() {
        let m = ModelSpec::ornstein_uhlenbeck(1.5, 1.0);
        let e = simulate(&m, &Partition::uniform(1.0, 40).unwrap(), 300, 4).unwrap();
        let t1 = box_theta(0.1, 0.6, 1.5);
        let t2 = box_theta(0.4, 0.9, 2.5);
        let a = -1.7;
        let combo = t1.grid().combine(a, t2.grid(), 1.0).unwrap();
        let s1 = drift_measure_samples(&e, &m, t1.grid(), Exec::default()).unwrap();
        let s2 = drift_measure_samples(&e, &m, t2.grid(), Exec::default()).unwrap();
        let sc = drift_measure_samples(&e, &m, &combo, Exec::default()).unwrap();
        for ((u, v), w) in s1.iter().zip(&s2).zip(&sc) {
            assert!((a * u + v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_foreign_ensemble() {
        let e = simulate(&ModelSpec::brownian(1.0), &Partition::uniform(1.0, 4).unwrap(), 2, 1).unwrap();
        let th = box_theta(0.2, 0.8, 2.0);
        let r = drift_measure_x(&e, &ModelSpec::drifted_brownian(1.0, 1.0), th.grid(), Exec::default());
        assert!(matches!(r, Err(Error::ModelMismatch { .. })));
    }

    #[test]
    fn antiderivative_is_exact_for_linear_pieces() {
        let th = box_theta(0.2, 0.8, 2.0);
        let f = GridFunction::from_fn(vec![0.0], xs(), |_, x| 0.5 * x * x).unwrap();
        let phi = inner_antiderivative(&th, &f).unwrap();
        // θ_{,2} = 1 on (−2,−1) and −1 on (1,2); f_{,2} equals the cell
        // midpoint on each 0.2-cell, so each side contributes −7.5·0.2.
        assert!((phi.value(0.5, 3.0) + 3.0).abs() < 1e-12, "{}", phi.value(0.5, 3.0));
        assert_eq!(phi.value(0.5, -3.0), 0.0);
        assert_eq!(phi.value(0.9, 1.0), 0.0);
    }

    #[test]
    fn continuous_martingale_leaves_only_the_bilinear_term() {
        let m = ModelSpec::brownian(1.0);
        let e = simulate(&m, &Partition::uniform(1.0, 20).unwrap(), 100, 5).unwrap();
        let o = CallOracle::brownian();
        let c = CallSurface::from_fn((0..=20).map(|i| i as f64 * 0.05).collect(), xs(), |t, x| o.call(t, x), |t| o.mean(t), None).unwrap();
        let th = box_theta(0.2, 0.8, 2.0);
        let f = GridFunction::from_fn(vec![0.0, 0.5], xs(), |t, x| (x - t).abs()).unwrap();
        let r = mu_tilde(&f, &th, &c, &e, &m, Exec::default()).unwrap();
        assert_eq!(r.drift.mean, 0.0);
        assert_eq!(r.jump.mean, 0.0);
        assert_eq!(r.value, r.bilinear.value);
        let zero = GridFunction::from_fn(vec![0.0], xs(), |_, _| 0.0).unwrap();
        assert_eq!(mu_tilde(&zero, &th, &c, &e, &m, Exec::default()).unwrap().value, 0.0);
    }

    #[test]
    fn jump_sums_respect_the_integrability_bound() {
        let m = ModelSpec::jump_diffusion(2.0, 0.6, 1.0);
        let e = simulate(&m, &Partition::uniform(1.0, 40).unwrap(), 500, 6).unwrap();
        let o = CallOracle::PoissonGaussian { x0: 0.0, drift: 0.0, sigma: 1.0, rate: 2.0, size: 0.6 };
        let c = CallSurface::from_fn((0..=20).map(|i| i as f64 * 0.05).collect(), xs(), |t, x| o.call(t, x), |t| o.mean(t), None).unwrap();
        let th = box_theta(0.2, 0.8, 2.0);
        let f = GridFunction::from_fn(vec![0.0], xs(), |_, x| (x - 0.3).max(0.0)).unwrap();
        let r = mu_tilde(&f, &th, &c, &e, &m, Exec::default()).unwrap();
        assert_eq!(r.bound_violations, 0);
        assert!(r.jump_abs.mean.is_finite() && r.jump_abs.mean > 0.0);
    }
}
