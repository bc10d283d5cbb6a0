//! Monte-Carlo suites comparing two independently computed sides of a
//! drift identity: the Itô drift against μ̃, the occupation identity, and
//! the symmetry identity with the quadratic covariation.

use super::report::{Check, ExperimentReport, Figure, Series};
use super::suite::{batched, new_report, Suite, SuiteParams};
use crate::error::Result;
use crate::exec::{Exec, McEstimate};
use crate::function_space::{eval_on_path, CompactGridFunction, GridFunction};
use crate::marginals::{CallOracle, CallSurface};
use crate::measures::mu_tilde;
use crate::numerics::gauss_legendre;
use crate::process_models::{JumpSize, ModelSpec, Partition, PathView};
use crate::smooth::{Bump, Smooth};
use crate::stochastic_calculus::{ito_drift_samples, qv_partition, SampledPath};

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Brownian motion with uncompensated compound-Poisson jumps: drift
/// b = λ·z, continuous part driftless.
pub fn compound_poisson_bm(rate: f64, size: f64, horizon: f64) -> ModelSpec {
    ModelSpec::new("bm_compound_poisson", horizon)
        .with_constant_vol(1.0)
        .with_constant_drift(rate * size)
        .with_poisson_jumps(rate, JumpSize::Fixed { size })
}

/// Closed-form C on a grid with t-step 0.025 (aligned with the test
/// functions' time nodes).
fn oracle_surface(oracle: &CallOracle, x_min: f64, x_max: f64) -> Result<CallSurface> {
    let ts = uniform(0.0, 1.0, 40);
    let nx = ((x_max - x_min) / 0.05).round() as usize;
    CallSurface::from_fn(ts, uniform(x_min, x_max, nx), |t, x| oracle.call(t, x), |t| oracle.mean(t), None)
}

/// Plateau in t (½, 1, ½ on [0.2,0.3), [0.3,0.7), [0.7,0.8)) times a
/// trapezoid in x through the four given nodes.
fn plateau(x_nodes: [f64; 4]) -> Result<CompactGridFunction> {
    CompactGridFunction::tensor(
        vec![0.0, 0.2, 0.3, 0.7, 0.8],
        &[0.0, 0.5, 1.0, 0.5, 0.0],
        x_nodes.to_vec(),
        &[0.0, 1.0, 1.0, 0.0],
    )
}

fn sampled_bump(b: &Bump) -> Result<GridFunction> {
    let (lo, hi) = b.x_support().expect("bumps have compact support");
    let xs = uniform(lo, hi, ((hi - lo) / 0.005).round() as usize);
    let v = xs.iter().map(|&x| b.value(0.0, x)).collect();
    GridFunction::time_independent(xs, v)
}

struct DriftConfig {
    name: &'static str,
    model: ModelSpec,
    oracle: CallOracle,
    f: Bump,
    theta: CompactGridFunction,
}

fn drift_configs() -> Result<Vec<DriftConfig>> {
    let wide = plateau([-1.0, -0.5, 1.5, 2.0])?;
    Ok(vec![
        DriftConfig {
            name: "drifted_bm",
            model: ModelSpec::drifted_brownian(1.0, 1.0),
            oracle: CallOracle::Gaussian { x0: 0.0, drift: 1.0, sigma: 1.0 },
            f: Bump::new(0.5, 1.5, 1.0),
            theta: wide.clone(),
        },
        DriftConfig {
            name: "bm_compound_poisson",
            model: compound_poisson_bm(1.0, 0.5, 1.0),
            oracle: CallOracle::PoissonGaussian { x0: 0.0, drift: 0.5, sigma: 1.0, rate: 1.0, size: 0.5 },
            f: Bump::new(0.5, 1.5, 1.0),
            theta: wide,
        },
        DriftConfig {
            name: "disjoint_support",
            model: ModelSpec::jump_diffusion(1.0, 2.25, 1.0),
            oracle: CallOracle::PoissonGaussian { x0: 0.0, drift: 0.0, sigma: 1.0, rate: 1.0, size: 2.25 },
            f: Bump::new(2.0, 0.5, 1.0),
            theta: plateau([-1.0, -0.75, -0.25, 0.0])?,
        },
    ])
}

pub(crate) fn drift_identity_suite(params: &SuiteParams, exec: Exec) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::DriftIdentity, params)?;
    let partition = Partition::uniform(1.0, params.steps)?;
    for cfg in drift_configs()? {
        if !params.wants(cfg.name) {
            continue;
        }
        let c = oracle_surface(&cfg.oracle, -6.0, 9.0)?;
        let f_grid = sampled_bump(&cfg.f)?;
        let mut bilinear = None;
        let pairs = batched(&cfg.model, &partition, params, exec, |e| {
            let ito = ito_drift_samples(&cfg.f, &cfg.theta, e, &cfg.model, exec)?;
            let mt = mu_tilde(&f_grid, &cfg.theta, &c, e, &cfg.model, exec)?;
            if bilinear.is_none() {
                bilinear = Some(mt.bilinear.value);
            }
            Ok(ito.into_iter().zip(mt.samples).collect::<Vec<_>>())
        })?;
        let bilinear = bilinear.unwrap_or(0.0);
        let ito: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mt: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
        let ito = McEstimate::from_samples(&ito);
        let mt = McEstimate::from_samples(&mt);
        let paired = McEstimate::from_samples(&diff);
        let combined = ito.combined_se(&mt);
        let lhs = ito.mean;
        let rhs = bilinear + mt.mean;
        report.push(
            Check::at_most(format!("{}_abs_diff_over_combined_se", cfg.name), (lhs - rhs).abs() / combined, 3.0, Some(combined))
                .term("ito_drift", lhs)
                .term("ito_drift_se", ito.se)
                .term("mu_tilde", rhs)
                .term("mu_tilde_se", mt.se)
                .term("mu_tilde_bilinear", bilinear)
                .term("paired_diff_se", paired.se),
        );
    }
    report.note("Combined SE = sqrt(SE_ito² + SE_mu_tilde²), both from the same paths; the paired-difference SE is reported alongside.");
    Ok(report)
}

/// Θ(t,x) = ∫_{−∞}^x θ(t,y) dy for the row of a piecewise-linear grid θ.
fn row_antiderivative(theta: &GridFunction, row: usize, x: f64) -> f64 {
    let xs = theta.x_nodes();
    let v = theta.row(row);
    let mut acc = 0.0;
    for j in 0..xs.len() - 1 {
        if x <= xs[j] {
            break;
        }
        let hi = x.min(xs[j + 1]);
        let slope = (v[j + 1] - v[j]) / (xs[j + 1] - xs[j]);
        let end = v[j] + slope * (hi - xs[j]);
        acc += 0.5 * (v[j] + end) * (hi - xs[j]);
    }
    acc
}

/// ∫_a^b w(x)·θ_row(x) dx, split at the θ nodes and at the kinks of w so
/// the rule is exact for piecewise-polynomial w of degree ≤ 8.
fn row_weighted_integral(
    theta: &GridFunction,
    row: usize,
    a: f64,
    b: f64,
    kinks: &[f64],
    w: &dyn Fn(f64) -> f64,
) -> f64 {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo];
    cuts.extend(theta.x_nodes().iter().chain(kinks).copied().filter(|&x| x > lo && x < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.push(hi);
    sign * cuts.windows(2).map(|c| gauss_legendre(|x| w(x) * theta.row_value(row, x), c[0], c[1])).sum::<f64>()
}

/// Per-path (½∫θσ²dt, ∫Θ b dt, Σ∫(X_t − x)θ⁻dx), left-point on segments.
fn occupation_terms(path: &PathView<'_>, model: &ModelSpec, theta: &GridFunction) -> [f64; 3] {
    let (mut qv, mut drift, mut jump) = (0.0, 0.0, 0.0);
    for s in path.segments() {
        let dt = s.dt();
        if dt > 0.0 {
            let row = theta.row_index(s.t0);
            let sigma = model.vol(s.t0, s.x_left);
            qv += 0.5 * theta.row_value(row, s.x_left) * sigma * sigma * dt;
            let b = model.drift(s.t0, s.x_left);
            if b != 0.0 {
                drift += row_antiderivative(theta, row, s.x_left) * b * dt;
            }
        }
    }
    for j in path.jumps {
        let row = theta.left_row_index(j.t);
        jump += row_weighted_integral(theta, row, j.pre, j.post, &[], &|x| j.post - x);
    }
    [qv, drift, jump]
}

/// ∬ θ d_tC dx with C(t, ·) from the oracle at θ's t-nodes.
fn occupation_lhs(theta: &GridFunction, oracle: &CallOracle, horizon: f64) -> f64 {
    let ts = theta.t_nodes();
    (0..ts.len())
        .map(|i| {
            let t1 = ts.get(i + 1).copied().unwrap_or(horizon).min(horizon);
            if t1 <= ts[i] {
                return 0.0;
            }
            row_weighted_integral(theta, i, theta.x_nodes()[0], *theta.x_nodes().last().unwrap(), &[0.0], &|x| {
                oracle.call(t1, x) - oracle.call(ts[i], x)
            })
        })
        .sum()
}

fn box_theta() -> Result<GridFunction> {
    let xs = vec![-1.2, -1.0, 1.0, 1.2];
    let mut values = vec![0.0; 4];
    values.extend([0.0, 1.0, 1.0, 0.0]);
    values.extend([0.0; 4]);
    GridFunction::new(vec![0.0, 0.1, 0.9], xs, values, 5.0)
}

pub(crate) fn occupation_suite(params: &SuiteParams, exec: Exec) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::Occupation, params)?;
    let theta = box_theta()?;
    let partition = Partition::uniform(1.0, params.steps)?;
    let models = [
        (ModelSpec::brownian(1.0), CallOracle::brownian()),
        (ModelSpec::drifted_brownian(0.5, 1.0), CallOracle::Gaussian { x0: 0.0, drift: 0.5, sigma: 1.0 }),
        (
            compound_poisson_bm(1.0, 0.5, 1.0),
            CallOracle::PoissonGaussian { x0: 0.0, drift: 0.5, sigma: 1.0, rate: 1.0, size: 0.5 },
        ),
    ];
    for (model, oracle) in &models {
        if !params.wants(&model.tag) {
            continue;
        }
        let terms = batched(model, &partition, params, exec, |e| {
            Ok(exec.map(e.n_paths(), |p| occupation_terms(&e.path(p), model, &theta)))
        })?;
        let total: Vec<f64> = terms.iter().map(|t| t[0] + t[1] + t[2]).collect();
        let pick = |k: usize| McEstimate::from_samples(&terms.iter().map(|t| t[k]).collect::<Vec<_>>());
        let rhs = McEstimate::from_samples(&total);
        let lhs = occupation_lhs(&theta, oracle, 1.0);
        report.push(
            Check::at_most(format!("{}_abs_diff_over_se", model.tag), (lhs - rhs.mean).abs() / rhs.se, 3.0, Some(rhs.se))
                .term("lhs", lhs)
                .term("rhs", rhs.mean)
                .term("qv_term", pick(0).mean)
                .term("drift_term", pick(1).mean)
                .term("jump_term", pick(2).mean),
        );
    }

    if params.wants("pure_drift") {
        // X_t = t: C(t,x) = (t − x)_+, so both sides are deterministic.
        let lhs = row_weighted_integral(&theta, 1, -1.2, 1.2, &[0.1, 0.9], &|x| (0.9 - x).max(0.0) - (0.1 - x).max(0.0));
        let rhs: f64 = (0..64)
            .map(|k| {
                let (a, b) = (0.1 + 0.8 * k as f64 / 64.0, 0.1 + 0.8 * (k + 1) as f64 / 64.0);
                gauss_legendre(|t| row_antiderivative(&theta, 1, t), a, b)
            })
            .sum();
        report.push(Check::at_most("pure_drift_abs_diff", (lhs - rhs).abs(), 1e-9, None).term("lhs", lhs).term("rhs", rhs));
        let zero = GridFunction::new(vec![0.0], vec![-1.0, 1.0], vec![0.0, 0.0], 0.0)?;
        let z = occupation_lhs(&zero, &CallOracle::brownian(), 1.0);
        report.push(Check::at_most("zero_theta_lhs", z.abs(), 0.0, None));
    }
    report.note("θ = trapezoid on [−1.2, 1.2] (plateau [−1, 1]) for t ∈ [0.1, 0.9); left side from the closed-form C, right side by simulation.");
    Ok(report)
}

/// Time profile sin² on [t_a, t_b] sampled every 0.05, times a sampled
/// bump in x on a 0.05 grid.
fn tensor_bump(center: f64, radius: f64) -> Result<CompactGridFunction> {
    let ts = uniform(0.0, 1.0, 20);
    let (t_a, t_b) = (0.2, 0.8);
    let tv: Vec<f64> = ts
        .iter()
        .map(|&t| if t >= t_a && t < t_b { (std::f64::consts::PI * (t - t_a + 0.025) / (t_b - t_a)).sin().powi(2) } else { 0.0 })
        .collect();
    let b = Bump::new(center, radius, 1.0);
    let n = (2.0 * radius / 0.05).round() as usize;
    let xs = uniform(center - radius - 0.05, center + radius + 0.05, n + 2);
    let xv: Vec<f64> = xs.iter().map(|&x| b.value(0.0, x)).collect();
    CompactGridFunction::tensor(ts, &tv, xs, &xv)
}

/// |x| / se, with an exact zero counted as zero standard errors.
fn se_ratio(x: f64, se: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs() / se
    }
}

pub(crate) fn symmetry_suite(params: &SuiteParams, exec: Exec) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::Symmetry, params)?;
    let model = ModelSpec::brownian(1.0);
    let c = oracle_surface(&CallOracle::brownian(), -6.0, 6.0)?;
    let partition = Partition::uniform(1.0, params.steps)?;
    let a = tensor_bump(-0.2, 1.2)?;
    let b = tensor_bump(0.6, 1.0)?;
    let d = tensor_bump(3.0, 0.8)?;
    let pairs = [("f_equals_g", &a, &a), ("overlapping", &a, &b), ("disjoint", &a, &d)];
    let mut bars = Vec::new();
    for (name, f, g) in pairs {
        let mut det = None;
        let rows = batched(&model, &partition, params, exec, |e| {
            let fg = mu_tilde(f.grid(), g, &c, e, &model, exec)?;
            let gf = mu_tilde(g.grid(), f, &c, e, &model, exec)?;
            if det.is_none() {
                det = Some((fg.bilinear.value, gf.bilinear.value));
            }
            let qv = exec.map(e.n_paths(), |p| {
                let path = e.path(p);
                let y = SampledPath::from_values(path.times, &eval_on_path(f.grid(), &path));
                let z = SampledPath::from_values(path.times, &eval_on_path(g.grid(), &path));
                qv_partition(&y, &z, e.partition()).map(|q| q.terminal())
            });
            let qv: Vec<f64> = qv.into_iter().collect::<Result<_>>()?;
            Ok(fg.samples.iter().zip(&gf.samples).zip(qv).map(|((x, y), q)| [*x, *y, q]).collect::<Vec<_>>())
        })?;
        let (bfg, bgf) = det.unwrap_or((0.0, 0.0));
        let total: Vec<f64> = rows.iter().map(|r| r[0] + r[1] + r[2]).collect();
        let res = McEstimate::from_samples(&total);
        let residual = bfg + bgf + res.mean;
        let qv = McEstimate::from_samples(&rows.iter().map(|r| r[2]).collect::<Vec<_>>());
        let mu_fg = bfg + rows.iter().map(|r| r[0]).sum::<f64>() / rows.len() as f64;
        let mu_gf = bgf + rows.iter().map(|r| r[1]).sum::<f64>() / rows.len() as f64;
        report.push(
            Check::at_most(format!("{name}_abs_residual_over_se"), se_ratio(residual, res.se), 3.0, Some(res.se))
                .term("mu_tilde_f_of_g", mu_fg)
                .term("mu_tilde_g_of_f", mu_gf)
                .term("covariation", qv.mean)
                .term("covariation_se", qv.se),
        );
        if std::ptr::eq(f, g) {
            let twice: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + r[2]).collect();
            let twice = McEstimate::from_samples(&twice);
            let direct = 2.0 * bfg + twice.mean;
            report.push(
                Check::at_most("twice_mu_tilde_plus_quadratic_variation_over_se", se_ratio(direct, twice.se), 3.0, Some(twice.se))
                    .term("twice_mu_tilde", 2.0 * mu_fg)
                    .term("quadratic_variation", qv.mean),
            );
        }
        bars.push(residual);
    }
    report.figures.push(Figure::Lines {
        name: "symmetry_residuals".into(),
        x_label: "pair".into(),
        y_label: "residual".into(),
        log_log: false,
        series: vec![Series { label: "residual".into(), x: (0..bars.len()).map(|i| i as f64).collect(), y: bars }],
    });
    report.note("Brownian motion; f, g are sin²-in-time × bump-in-space grid functions; covariation by partition sums on the simulation mesh.");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antiderivative_of_trapezoid_row() {
        let th = box_theta().unwrap();
        assert_eq!(row_antiderivative(&th, 1, -5.0), 0.0);
        assert!((row_antiderivative(&th, 1, 0.0) - 1.1).abs() < 1e-12);
        assert!((row_antiderivative(&th, 1, 5.0) - 2.2).abs() < 1e-12);
        assert_eq!(row_antiderivative(&th, 0, 5.0), 0.0);
    }

    #[test]
    fn weighted_integral_is_oriented() {
        let th = box_theta().unwrap();
        let a = row_weighted_integral(&th, 1, -0.5, 0.5, &[], &|x| x * x);
        assert!((a - 1.0 / 12.0).abs() < 1e-13);
        assert!((row_weighted_integral(&th, 1, 0.5, -0.5, &[], &|x| x * x) + a).abs() < 1e-15);
    }

    #[test]
    fn small_runs_are_reproducible() {
        let params = SuiteParams { n_paths: 400, steps: 50, seed: 1, chunk: 150, models: Some(vec!["bm".into()]) };
        let a = occupation_suite(&params, Exec::Parallel).unwrap();
        let b = occupation_suite(&params, Exec::Sequential).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.checks.len(), 1);
    }
}
