use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{Exec, McEstimate};
use crate::function_space::SpaceTimeFn;
use crate::numerics::gauss_legendre_composite;
use crate::process_models::{ModelSpec, PathEnsemble, PathView};
use crate::smooth::Smooth;

const REMAINDER_PANELS: usize = 8;

/// Y_t = f(t, X_t) = M_t + A_t at the partition nodes of every path, with
/// A_0 = 0. Stored row-major, one row per path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftDecomposition {
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub y: Vec<f64>,
    pub a: Vec<f64>,
}

impl DriftDecomposition {
    pub fn new(times: Vec<f64>, y: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        let n = times.len();
        if n == 0 || y.len() != a.len() || !y.len().is_multiple_of(n) {
            return Err(invalid("decomposition arrays do not match the node count"));
        }
        Ok(Self { n_paths: y.len() / n, times, y, a })
    }

    fn row(&self, p: usize) -> std::ops::Range<usize> {
        let n = self.times.len();
        p * n..(p + 1) * n
    }

    pub fn y_path(&self, p: usize) -> &[f64] {
        &self.y[self.row(p)]
    }

    pub fn a_path(&self, p: usize) -> &[f64] {
        &self.a[self.row(p)]
    }

    /// M = Y − A.
    pub fn m_path(&self, p: usize) -> Vec<f64> {
        self.y_path(p).iter().zip(self.a_path(p)).map(|(y, a)| y - a).collect()
    }

    /// Σ_k |A_{t_{k+1}} − A_{t_k}|, a lower bound on the variation of A.
    pub fn node_variation(&self, p: usize) -> f64 {
        self.a_path(p).windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }
}

/// J⁰ = ∫_{x_pre}^{x_post} (x_post − x) f_{,22}(t, x) dx, which equals
/// f(t, x_post) − f(t, x_pre) − f_{,2}(t, x_pre)(x_post − x_pre).
///
/// The interval is split at the ends of f's x-support, where f_{,22} may
/// have a kink.
pub fn jump_remainder(f: &dyn Smooth, t: f64, x_pre: f64, x_post: f64) -> f64 {
    let (lo, hi) = (x_pre.min(x_post), x_pre.max(x_post));
    let mut cuts = vec![lo];
    if let Some((a, b)) = f.x_support() {
        cuts.extend([a, b].into_iter().filter(|&c| c > lo && c < hi));
    }
    cuts.push(hi);
    let integral: f64 = cuts
        .windows(2)
        .map(|w| gauss_legendre_composite(|x| (x_post - x) * f.d_xx(t, x), w[0], w[1], REMAINDER_PANELS))
        .sum();
    if x_post >= x_pre {
        integral
    } else {
        -integral
    }
}

fn finite(v: f64, what: &'static str, t: f64, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, t, x })
    }
}

/// Density of the absolutely continuous part of dA: f_{,1} + ½σ²f_{,22} + b f_{,2}.
fn drift_rate(f: &dyn Smooth, model: &ModelSpec, t: f64, x: f64) -> Result<f64> {
    let f1 = finite(f.d_t(t, x), "f_{,1}", t, x)?;
    let f2 = finite(f.d_x(t, x), "f_{,2}", t, x)?;
    let f22 = finite(f.d_xx(t, x), "f_{,22}", t, x)?;
    let s = model.vol(t, x);
    Ok(f1 + 0.5 * s * s * f22 + model.drift(t, x) * f2)
}

/// ∫_0^{t_k} w(s, X_{s−}) dA_s at every node. The dt part is evaluated at the
/// left end of each jump-free segment, the jump part at the pre-jump state.
fn weighted_drift_path(
    f: &dyn Smooth,
    weight: Option<&dyn SpaceTimeFn>,
    path: &PathView<'_>,
    model: &ModelSpec,
) -> Result<Vec<f64>> {
    let w = |t: f64, x: f64| weight.map_or(1.0, |th| th.eval(t, x));
    let w_left = |t: f64, x: f64| weight.map_or(1.0, |th| th.eval_left(t, x));
    let times = path.times;
    let mut out = Vec::with_capacity(times.len());
    out.push(0.0);
    let mut acc = 0.0;
    let mut j = 0;
    for k in 0..times.len() - 1 {
        let t1 = times[k + 1];
        let (mut t0, mut x0) = (times[k], path.values[k]);
        while j < path.jumps.len() && path.jumps[j].t <= t1 {
            let jr = path.jumps[j];
            if jr.t > t0 {
                acc += w(t0, x0) * drift_rate(f, model, t0, x0)? * (jr.t - t0);
            }
            let j0 = finite(jump_remainder(f, jr.t, jr.pre, jr.post), "jump remainder", jr.t, jr.pre)?;
            acc += w_left(jr.t, jr.pre) * j0;
            t0 = jr.t;
            x0 = jr.post;
            j += 1;
        }
        if t1 > t0 {
            acc += w(t0, x0) * drift_rate(f, model, t0, x0)? * (t1 - t0);
        }
        out.push(acc);
    }
    Ok(out)
}

fn check_tag(ensemble: &PathEnsemble, model: &ModelSpec) -> Result<()> {
    if ensemble.model_tag != model.tag {
        return Err(Error::ModelMismatch { ensemble: ensemble.model_tag.clone(), model: model.tag.clone() });
    }
    Ok(())
}

/// Decompose f(t, X_t) into martingale and drift parts on every path.
///
/// A collects ∫f_{,1}dt, ½∫f_{,22}d[X]^c with [X]^c = ∫σ²dt, ∫f_{,2}b dt and
/// the jump remainders J⁰; M = Y − A.
pub fn ito_drift(f: &dyn Smooth, ensemble: &PathEnsemble, model: &ModelSpec, exec: Exec) -> Result<DriftDecomposition> {
    check_tag(ensemble, model)?;
    let n = ensemble.n_nodes();
    let rows = exec.map(ensemble.n_paths(), |p| {
        let path = ensemble.path(p);
        let a = weighted_drift_path(f, None, &path, model)?;
        let y: Vec<f64> = path.times.iter().zip(path.values).map(|(&t, &x)| f.value(t, x)).collect();
        Ok::<_, Error>((y, a))
    });
    let mut y = Vec::with_capacity(n * ensemble.n_paths());
    let mut a = Vec::with_capacity(n * ensemble.n_paths());
    for r in rows {
        let (yr, ar) = r?;
        y.extend(yr);
        a.extend(ar);
    }
    DriftDecomposition::new(ensemble.partition().times().to_vec(), y, a)
}

/// Per-path ∫_0^T θ⁻(t, X_{t−}) dA_t.
pub fn ito_drift_samples(
    f: &dyn Smooth,
    theta: &dyn SpaceTimeFn,
    ensemble: &PathEnsemble,
    model: &ModelSpec,
    exec: Exec,
) -> Result<Vec<f64>> {
    check_tag(ensemble, model)?;
    exec.map(ensemble.n_paths(), |p| {
        let b = weighted_drift_path(f, Some(theta), &ensemble.path(p), model)?;
        Ok(*b.last().expect("non-empty"))
    })
    .into_iter()
    .collect()
}

/// μ_f^X(θ⁻) = E[∫ θ⁻(t, X_{t−}) dA_t] with its standard error.
pub fn ito_drift_functional(
    f: &dyn Smooth,
    theta: &dyn SpaceTimeFn,
    ensemble: &PathEnsemble,
    model: &ModelSpec,
    exec: Exec,
) -> Result<McEstimate> {
    Ok(McEstimate::from_samples(&ito_drift_samples(f, theta, ensemble, model, exec)?))
}

/// Per-path cumulative ∫θ⁻ dA at the nodes, row-major.
pub(crate) fn weighted_drift_rows(
    f: &dyn Smooth,
    theta: &dyn SpaceTimeFn,
    ensemble: &PathEnsemble,
    model: &ModelSpec,
    exec: Exec,
) -> Result<Vec<f64>> {
    check_tag(ensemble, model)?;
    let rows = exec.map(ensemble.n_paths(), |p| weighted_drift_path(f, Some(theta), &ensemble.path(p), model));
    let mut out = Vec::with_capacity(ensemble.n_paths() * ensemble.n_nodes());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::drift_measure_x;
    use crate::process_models::{simulate, Partition};
    use crate::smooth::{Bump, FnSmooth, Identity, Square};

    #[test]
    fn identity_on_martingale_has_no_drift() {
        let p = Partition::uniform(1.0, 20).unwrap();
        let m = ModelSpec::brownian(1.0);
        let e = simulate(&m, &p, 50, 1).unwrap();
        let d = ito_drift(&Identity, &e, &m, Exec::default()).unwrap();
        assert!(d.a.iter().all(|&a| a == 0.0));
        let th = |_: f64, x: f64| x.cos();
        assert_eq!(ito_drift_functional(&Identity, &th, &e, &m, Exec::default()).unwrap().mean, 0.0);
    }

    #[test]
    fn identity_with_unit_drift_recovers_time_and_drift_measure() {
        let p = Partition::uniform(1.0, 20).unwrap();
        let m = ModelSpec::drifted_brownian(1.0, 1.0);
        let e = simulate(&m, &p, 200, 2).unwrap();
        let d = ito_drift(&Identity, &e, &m, Exec::default()).unwrap();
        for k in 0..p.n_nodes() {
            assert!((d.a_path(7)[k] - p.times()[k]).abs() < 1e-12);
        }
        let th = |t: f64, x: f64| (1.0 - t) * (-x * x).exp();
        let lhs = ito_drift_functional(&Identity, &th, &e, &m, Exec::default()).unwrap();
        let rhs = drift_measure_x(&e, &m, &th, Exec::default()).unwrap();
        assert!((lhs.mean - rhs.mean).abs() < 1e-12);
    }

    #[test]
    fn remainder_quadrature_matches_taylor_form() {
        let b = Bump::new(0.2, 1.5, 1.0);
        for (pre, post) in [(0.0, 0.7), (0.5, -0.9), (-2.0, 0.1)] {
            let closed = b.value(0.0, post) - b.value(0.0, pre) - b.d_x(0.0, pre) * (post - pre);
            assert!((jump_remainder(&b, 0.0, pre, post) - closed).abs() < 1e-6);
        }
        assert!((jump_remainder(&Square, 0.3, 1.0, -0.5) - 2.25).abs() < 1e-13);
    }

    #[test]
    fn decomposition_reproduces_y_and_has_finite_variation() {
        let p = Partition::uniform(1.0, 50).unwrap();
        let m = ModelSpec::jump_diffusion(2.0, 0.5, 1.0);
        let e = simulate(&m, &p, 100, 4).unwrap();
        let d = ito_drift(&Square, &e, &m, Exec::default()).unwrap();
        for q in 0..d.n_paths {
            let mp = d.m_path(q);
            for k in 0..p.n_nodes() {
                assert!((mp[k] + d.a_path(q)[k] - d.y_path(q)[k]).abs() < 1e-12);
            }
            assert!(d.node_variation(q).is_finite());
        }
    }

    fn check_martingale_part(m: &ModelSpec, f: &dyn Smooth, seed: u64) {
        let p = Partition::uniform(1.0, 100).unwrap();
        let e = simulate(m, &p, 20_000, seed).unwrap();
        let d = ito_drift(f, &e, m, Exec::default()).unwrap();
        for (k0, k1) in [(0, 25), (25, 50), (50, 75), (75, 100), (0, 100)] {
            let incs: Vec<f64> = (0..d.n_paths)
                .map(|q| {
                    let mp = d.m_path(q);
                    mp[k1] - mp[k0]
                })
                .collect();
            let est = McEstimate::from_samples(&incs);
            assert!(est.mean.abs() < 3.0 * est.se + 1e-12, "[{k0},{k1}] {est:?}");
        }
    }

    #[test]
    fn martingale_part_has_zero_mean_increments() {
        check_martingale_part(&ModelSpec::brownian(1.0), &Square, 11);
        check_martingale_part(&ModelSpec::ornstein_uhlenbeck(1.0, 1.0), &Bump::new(0.0, 2.0, 1.0), 12);
        check_martingale_part(&ModelSpec::jump_diffusion(2.0, 0.5, 1.0), &Bump::new(0.3, 2.0, 1.0), 13);
    }

    #[test]
    fn nonfinite_derivative_is_reported() {
        let p = Partition::uniform(1.0, 4).unwrap();
        let m = ModelSpec::brownian(1.0);
        let e = simulate(&m, &p, 3, 1).unwrap();
        let bad = FnSmooth::new(|_, x| x, |_, _| f64::NAN, |_, _| 1.0, |_, _| 0.0);
        let err = ito_drift(&bad, &e, &m, Exec::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { what: "f_{,1}", .. }));
    }

    #[test]
    fn model_tag_mismatch_is_rejected() {
        let p = Partition::uniform(1.0, 4).unwrap();
        let e = simulate(&ModelSpec::brownian(1.0), &p, 3, 1).unwrap();
        let other = ModelSpec::drifted_brownian(1.0, 1.0);
        assert!(matches!(ito_drift(&Identity, &e, &other, Exec::default()), Err(Error::ModelMismatch { .. })));
    }
}
