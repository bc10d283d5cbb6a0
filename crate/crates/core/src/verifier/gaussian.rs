//! Suites that need no path simulation beyond the Gaussian reference:
//! call-surface oracles, the backward residual and the martingale
//! condition over a θ-basis.

use nalgebra::{DMatrix, DVector};

use super::backward::{backward_residual, gaussian_call_price, residual_refinement, Differencing};
use super::martingale::{martingale_condition_values, theta_basis, BasisTolerance};
use super::report::{Check, ExperimentReport, Figure, Series};
use super::suite::{new_report, Suite, SuiteParams};
use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::function_space::{CompactGridFunction, GridFunction, SupportBox};
use crate::marginals::{
    call_surface_forward_pde, conditional_expectation_surface, dupire_sigma, estimate_call_surface, CallOracle,
    CallSurface, PdeGrid, CURVATURE_FLOOR,
};
use crate::measures::mu_bilinear;
use crate::numerics::gauss_legendre_composite;
use crate::process_models::{simulate, ModelSpec, Partition};
use crate::smooth::{Bump, Identity, Smooth, Square};

/// Nodes with fewer exceedances than this carry no usable standard error.
const MIN_TAIL_PATHS: usize = 50;

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

pub(crate) fn gaussian_oracle_suite(params: &SuiteParams, exec: Exec) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::GaussianOracle, params)?;
    let oracle = CallOracle::brownian();
    let model = ModelSpec::brownian(1.0);

    // Monte-Carlo surface against the closed form, node by node.
    let partition = Partition::uniform(1.0, params.steps)?;
    let ensemble = simulate(&model, &partition, params.n_paths, params.seed)?;
    let xs = uniform(-3.0, 3.0, 24);
    let ts = uniform(0.0, 1.0, 4);
    let mc = estimate_call_surface(&ensemble, xs.clone(), ts.clone(), exec)?;
    drop(ensemble);
    let raw = mc.raw.as_ref().expect("estimated surface keeps raw values");
    let support = mc.raw_support.as_ref().expect("estimated surface keeps tail counts");
    let (mut worst_z, mut compared) = (0.0f64, 0usize);
    let mut z_map = Vec::with_capacity(raw.len());
    for (i, &t) in ts.iter().enumerate().skip(1) {
        let tn = partition.times()[partition.nearest_node(t)];
        for (j, &x) in xs.iter().enumerate() {
            let k = i * xs.len() + j;
            let z = (raw[k].mean - oracle.call(tn, x)) / raw[k].se;
            if support[k] >= MIN_TAIL_PATHS && raw[k].se > 0.0 {
                worst_z = worst_z.max(z.abs());
                compared += 1;
                z_map.push(z);
            } else {
                z_map.push(0.0);
            }
        }
    }
    report.push(
        Check::at_most("mc_surface_max_abs_z", worst_z, 3.0, None)
            .term("nodes_compared", compared as f64)
            .term("nodes_total", raw.len() as f64),
    );
    report.figures.push(Figure::Heatmap { name: "mc_surface_z_scores".into(), x: xs, y: ts[1..].to_vec(), values: z_map });

    // Forward PDE against the closed form on the interior.
    let grid = PdeGrid::uniform(-7.0, 7.0, 1120, 1.0, 50, 5e-5);
    let pde = call_surface_forward_pde(&model, &grid)?;
    let mut worst_rel = 0.0f64;
    for (i, &t) in grid.t_nodes.iter().enumerate().skip(1) {
        for (j, &x) in grid.x_nodes.iter().enumerate() {
            if x.abs() <= 2.0 * t.sqrt() {
                let exact = oracle.call(t, x);
                worst_rel = worst_rel.max((pde.grid.at(i, j) - exact).abs() / exact);
            }
        }
    }
    report.push(Check::at_most("forward_pde_interior_rel_error", worst_rel, 0.01, None));

    // Local volatility recovered from the PDE surface.
    let mut worst_sigma = 0.0f64;
    let mut undefined = 0usize;
    let (mut sig_x, mut sig_y) = (Vec::new(), Vec::new());
    for &t in grid.t_nodes.iter().filter(|&&t| t >= 0.2) {
        for &x in grid.x_nodes.iter().filter(|&&x| x.abs() <= 1.5 * t.sqrt()) {
            match dupire_sigma(&pde, t, x, CURVATURE_FLOOR).value() {
                Some(s) => {
                    worst_sigma = worst_sigma.max((s - 1.0).abs());
                    if (t - 0.5).abs() < 1e-9 {
                        sig_x.push(x);
                        sig_y.push(s);
                    }
                }
                None => undefined += 1,
            }
        }
    }
    report.push(Check::at_most("dupire_sigma_interior_abs_error", worst_sigma, 0.02, None).term("undefined_nodes", undefined as f64));
    report.figures.push(Figure::Lines {
        name: "dupire_sigma_t0.5".into(),
        x_label: "x".into(),
        y_label: "sigma".into(),
        log_log: false,
        series: vec![Series { label: "recovered".into(), x: sig_x, y: sig_y }],
    });
    report.note("MC nodes with fewer than 50 paths above x are not compared; interior means |x| ≤ 2√t (PDE) and |x| ≤ 1.5√t, t ≥ 0.2 (local volatility).");
    Ok(report)
}

pub(crate) fn backward_residual_suite(params: &SuiteParams) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::BackwardResidual, params)?;
    let model = ModelSpec::brownian(1.0);
    let (ts, xs) = (uniform(0.0, 1.0, 10), uniform(-2.0, 2.0, 20));
    let r = backward_residual(&model, &Identity, &ts, &xs, Differencing::Analytic)?;
    report.push(Check::at_most("identity_residual", r.max_abs, 1e-12, None));
    let r = backward_residual(&model, &Square, &ts, &xs, Differencing::Analytic)?;
    let off = r.values.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    report.push(Check::at_most("square_residual_minus_one", off, 1e-12, None));

    let f = gaussian_call_price(0.0, 1.0, 1.0);
    let exact = backward_residual(&model, &f, &uniform(0.0, 0.8, 16), &uniform(-2.0, 2.0, 40), Differencing::Analytic)?;
    report.push(Check::at_most("call_price_analytic_residual", exact.max_abs, 1e-12, None));
    let refinement = residual_refinement(&model, &f, (0.0, 0.5), (-2.0, 2.0), 0.1, 4)?;
    let decreasing = refinement.max_abs.windows(2).all(|w| w[1] < w[0]);
    report.push(Check::holds("call_price_residual_decreasing", decreasing));
    let mut slope = Check::at_least("call_price_residual_loglog_slope", refinement.slope, 0.9, None);
    for (h, e) in refinement.steps.iter().zip(&refinement.max_abs) {
        slope = slope.term(&format!("max_abs_h{h}"), *e);
    }
    report.push(slope);
    let coarse = backward_residual(&model, &f, &uniform(0.0, 0.8, 8), &uniform(-2.0, 2.0, 40), Differencing::FiniteDifference)?;
    report.figures.push(Figure::Heatmap {
        name: "call_price_fd_residual".into(),
        x: coarse.x_nodes.clone(),
        y: coarse.t_nodes.clone(),
        values: coarse.values.clone(),
    });
    report.figures.push(Figure::Lines {
        name: "residual_refinement".into(),
        x_label: "h".into(),
        y_label: "max |residual|".into(),
        log_log: true,
        series: vec![Series { label: "finite differences".into(), x: refinement.steps, y: refinement.max_abs }],
    });
    report.note("Residual partials by forward difference in t and central differences in x on grids with Δt = Δx = h.");
    Ok(report)
}

/// Frozen from a refinement study: max |μ_[f,C](θ)| / ‖θ‖_{L¹} ≈ 0.05·mesh
/// for the PDE-solved call payoff on BM; κ doubles that.
const BASIS_KAPPA: f64 = 0.1;

pub(crate) fn martingale_condition_suite(params: &SuiteParams) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::MartingaleCondition, params)?;
    let oracle = CallOracle::brownian();
    let model = ModelSpec::brownian(1.0);
    let grid = PdeGrid::uniform(-6.0, 6.0, 240, 1.0, 40, 1.0 / 160.0);
    let mesh = (grid.x_nodes[1] - grid.x_nodes[0]).max(grid.t_nodes[1] - grid.t_nodes[0]);
    let c = CallSurface::from_fn(grid.t_nodes.clone(), grid.x_nodes.clone(), |t, x| oracle.call(t, x), |t| oracle.mean(t), None)?
        .declare_martingale();
    let domain = SupportBox { t_a: 0.2, t_b: 0.8, x_a: -1.5, x_b: 1.5 };
    let basis = theta_basis(domain, &[1, 2, 4])?;
    let tol = BasisTolerance { kappa: BASIS_KAPPA, mesh };

    let strike = 0.0;
    let payoff = move |x: f64| (x - strike).max(0.0);
    let f = conditional_expectation_surface(&model, &payoff, 1.0, &grid)?;
    let values = martingale_condition_values(&f.grid, &c, &basis, tol);
    let worst = values.iter().map(|v| v.value.abs() / v.tolerance).fold(0.0f64, f64::max);
    report.push(Check::at_most("martingale_f_max_value_over_tolerance", worst, 1.0, None).term("basis_size", basis.len() as f64));

    let stat = GridFunction::from_fn(grid.t_nodes.clone(), grid.x_nodes.clone(), |_, x| payoff(x))?;
    let control = martingale_condition_values(&stat, &c, &basis, tol);
    let strongest = control.iter().map(|v| v.value.abs() / v.tolerance).fold(0.0f64, f64::max);
    report.push(Check::exceeds("static_payoff_control_max_value_over_tolerance", strongest, 5.0, None));

    let linear = GridFunction::from_fn(grid.t_nodes.clone(), grid.x_nodes.clone(), |_, x| 2.0 * x - 1.0)?;
    let lin = martingale_condition_values(&linear, &c, &basis, tol);
    let lin_max = lin.iter().map(|v| v.value.abs()).fold(0.0f64, f64::max);
    report.push(Check::at_most("linear_f_max_abs_value", lin_max, 1e-12, None));

    local_measure_fit(&mut report, &c, &basis, &oracle, domain, tol)?;

    report.figures.push(Figure::Lines {
        name: "basis_values_over_tolerance".into(),
        x_label: "basis index".into(),
        y_label: "mu / tolerance".into(),
        log_log: false,
        series: vec![
            Series {
                label: "conditional expectation".into(),
                x: values.iter().map(|v| v.index as f64).collect(),
                y: values.iter().map(|v| v.value / v.tolerance).collect(),
            },
            Series {
                label: "static payoff".into(),
                x: control.iter().map(|v| v.index as f64).collect(),
                y: control.iter().map(|v| v.value / v.tolerance).collect(),
            },
        ],
    });
    report.note(format!("Tolerance per θ: {BASIS_KAPPA}·‖θ‖_L1·mesh with mesh = max(Δt, Δx) = {mesh}."));
    Ok(report)
}

/// For a non-martingale smooth f, fit a cellwise-constant density μ to
/// μ_[f,C](θ) = μ(θ) over the basis by least squares and compare it with
/// the drift of f(t, X_t), whose density is (½f'')·p_t for Brownian X.
fn local_measure_fit(
    report: &mut ExperimentReport,
    c: &CallSurface,
    basis: &[CompactGridFunction],
    oracle: &CallOracle,
    domain: SupportBox,
    tol: BasisTolerance,
) -> Result<()> {
    let bump = Bump::new(0.0, 2.5, 1.0);
    let f = GridFunction::time_independent(uniform(-6.0, 6.0, 1200), uniform(-6.0, 6.0, 1200).iter().map(|&x| bump.value(0.0, x)).collect())?;
    let density = |t: f64, x: f64| 0.5 * bump.d_xx(t, x) * oracle.density(t, x);
    let values: Vec<f64> = basis.iter().map(|th| mu_bilinear(&f, &c.grid, th)).collect();

    let mut worst = 0.0f64;
    for (th, v) in basis.iter().zip(&values) {
        let exact = integrate_theta(th, &density);
        worst = worst.max((v - exact).abs() / tol.of(th));
    }
    report.push(Check::at_most("bump_basis_values_vs_drift_over_tolerance", worst, 1.0, None));

    let n = 4;
    let (dt, dx) = ((domain.t_b - domain.t_a) / n as f64, (domain.x_b - domain.x_a) / n as f64);
    let mut a = DMatrix::<f64>::zeros(basis.len(), n * n);
    for (i, th) in basis.iter().enumerate() {
        for ci in 0..n {
            for cj in 0..n {
                let cell = SupportBox {
                    t_a: domain.t_a + ci as f64 * dt,
                    t_b: domain.t_a + (ci + 1) as f64 * dt,
                    x_a: domain.x_a + cj as f64 * dx,
                    x_b: domain.x_a + (cj + 1) as f64 * dx,
                };
                a[(i, ci * n + cj)] = integrate_theta_on(th, &|_, _| 1.0, cell);
            }
        }
    }
    let fitted = a
        .svd(true, true)
        .solve(&DVector::from_vec(values), 1e-12)
        .map_err(|e| invalid(format!("least-squares fit failed: {e}")))?;
    let fitted_tv: f64 = fitted.iter().map(|m| m.abs() * dt * dx).sum();
    let exact_tv = box_integral(&|t, x| density(t, x).abs(), domain);
    let rel = (fitted_tv - exact_tv).abs() / exact_tv;
    report.push(
        Check::at_most("fitted_measure_total_variation_rel_error", rel, 0.1, None)
            .term("fitted", fitted_tv)
            .term("drift", exact_tv),
    );
    report.note("Fitted measure: 4×4 cellwise-constant density on the basis domain; its total variation is compared with that of the drift measure (10% tolerance, consistency check only).");
    Ok(())
}

fn box_integral(g: &dyn Fn(f64, f64) -> f64, b: SupportBox) -> f64 {
    gauss_legendre_composite(|t| gauss_legendre_composite(|x| g(t, x), b.x_a, b.x_b, 48), b.t_a, b.t_b, 16)
}

/// ∬ θ·g over the intersection of θ's support with `cell`, exact in t
/// for the piecewise-constant rows of θ.
fn integrate_theta_on(theta: &CompactGridFunction, g: &dyn Fn(f64, f64) -> f64, cell: SupportBox) -> f64 {
    let grid = theta.grid();
    let ts = grid.t_nodes();
    let mut total = 0.0;
    for i in 0..ts.len() - 1 {
        let (t0, t1) = (ts[i].max(cell.t_a), ts[i + 1].min(cell.t_b));
        if t1 <= t0 {
            continue;
        }
        let row = |x: f64| grid.row_value(i, x);
        let xs = grid.x_nodes();
        for j in 0..xs.len() - 1 {
            let (x0, x1) = (xs[j].max(cell.x_a), xs[j + 1].min(cell.x_b));
            if x1 > x0 {
                total += gauss_legendre_composite(|t| gauss_legendre_composite(|x| row(x) * g(t, x), x0, x1, 4), t0, t1, 4);
            }
        }
    }
    total
}

fn integrate_theta(theta: &CompactGridFunction, g: &dyn Fn(f64, f64) -> f64) -> f64 {
    integrate_theta_on(theta, g, theta.support())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::theta_l1;

    #[test]
    fn theta_integral_matches_l1_norm_for_nonnegative_basis() {
        let b = theta_basis(SupportBox { t_a: 0.2, t_b: 0.8, x_a: -1.5, x_b: 1.5 }, &[1, 2]).unwrap();
        for th in &b {
            assert!((integrate_theta(th, &|_, _| 1.0) - theta_l1(th)).abs() < 1e-12);
        }
    }
}
