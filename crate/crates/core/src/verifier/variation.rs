//! Quadratic-variation and conditional-variation suites.

use super::report::{Check, ExperimentReport, Figure, Series};
use super::suite::{new_report, Suite, SuiteParams};
use crate::error::Result;
use crate::exec::{Exec, McEstimate};
use crate::function_space::GridFunction;
use crate::process_models::{simulate_range, ModelSpec, Partition, PathEnsemble};
use crate::smooth::{Bump, Smooth};
use crate::stochastic_calculus::{
    conditional_variation, dirichlet_qv_samples, reversed_conditional_variation, weighted_drift_rows, Binning,
    DirichletSamples,
};

const FACTORS: [usize; 4] = [8, 4, 2, 1];

/// x ↦ |x| clipped to [−6, 6], with a two-sided flat extension so the
/// grid covers every path.
fn clipped_abs() -> Result<GridFunction> {
    GridFunction::time_independent(vec![-50.0, -6.0, 0.0, 6.0, 50.0], vec![6.0, 6.0, 0.0, 6.0, 6.0])
}

pub(crate) fn dirichlet_suite(params: &SuiteParams, exec: Exec) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::DirichletQv, params)?;
    let model = ModelSpec::brownian(1.0);
    let partition = Partition::uniform(1.0, params.steps)?;
    let f = clipped_abs()?;
    let mut samples: Option<DirichletSamples> = None;
    let mut start = 0;
    while start < params.n_paths {
        let end = (start + params.chunk).min(params.n_paths);
        let e = simulate_range(&model, &partition, start..end, params.seed, exec)?;
        let s = dirichlet_qv_samples(&f, &e, &FACTORS, exec)?;
        match samples.as_mut() {
            Some(acc) => acc.merge(s)?,
            None => samples = Some(s),
        }
        start = end;
    }
    let Some(samples) = samples else {
        return Ok(report);
    };
    // P(|W_t| ≥ 6 for some t ≤ 1) < 2e-9, so E[[f(X)]_1] = 1 to that accuracy.
    let summary = samples.report(Some(1.0));
    let finest = summary.rows.last().expect("four factors");
    report.push(
        Check::at_most("finest_mesh_rel_error", finest.rel_error, 0.05, Some(finest.lhs.se))
            .term("mesh", finest.mesh)
            .term("lhs", finest.lhs.mean)
            .term("rhs", finest.rhs.mean),
    );
    let mut monotone = Check::holds("rel_error_monotone_in_mesh", summary.monotone_decay);
    for r in &summary.rows {
        monotone = monotone.term(&format!("rel_error_factor_{}", r.factor), r.rel_error);
    }
    report.push(monotone);
    report.figures.push(Figure::Lines {
        name: "dirichlet_rel_error".into(),
        x_label: "mesh".into(),
        y_label: "relative error".into(),
        log_log: true,
        series: vec![Series {
            label: "|x| clipped at 6".into(),
            x: summary.rows.iter().map(|r| r.mesh).collect(),
            y: summary.rows.iter().map(|r| r.rel_error.max(1e-12)).collect(),
        }],
    });
    report.note("f(x) = min(|x|, 6) on Brownian motion; the target E[[f(X)]_1] = 1 up to the exit probability of [−6, 6].");
    Ok(report)
}

/// Simulate on the fine partition in chunks and keep the coarse nodes.
fn coarse_ensemble(
    model: &ModelSpec,
    fine: &Partition,
    factor: usize,
    params: &SuiteParams,
    exec: Exec,
    mut per_chunk: impl FnMut(&PathEnsemble, &[usize]) -> Result<()>,
) -> Result<(PathEnsemble, Partition)> {
    let (coarse, idx) = fine.coarsen(factor)?;
    let mut parts = Vec::new();
    let mut start = 0;
    while start < params.n_paths {
        let end = (start + params.chunk).min(params.n_paths);
        let e = simulate_range(model, fine, start..end, params.seed, exec)?;
        per_chunk(&e, &idx)?;
        parts.push(e.restrict_nodes(coarse.clone(), &idx)?);
        start = end;
    }
    Ok((PathEnsemble::concat(parts)?, coarse))
}

/// Number of coarse steps the conditional variations are taken over.
const COARSE_STEPS: usize = 10;

pub(crate) fn conditional_variation_suite(params: &SuiteParams, exec: Exec) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::ConditionalVariation, params)?;
    let fine = Partition::uniform(1.0, params.steps)?;
    let factor = (params.steps / COARSE_STEPS).max(1);
    let binning = Binning::default();

    if params.wants("drifted_bm") {
        let model = ModelSpec::drifted_brownian(1.0, 1.0);
        let (e, coarse) = coarse_ensemble(&model, &fine, factor, params, exec, |_, _| Ok(()))?;
        let v = conditional_variation(&e, &coarse, binning, exec)?;
        let tol = v.bias_bound + 3.0 * v.estimate.se;
        report.push(
            Check::at_most("drifted_bm_abs_error", (v.estimate.mean - 1.0).abs(), tol, Some(v.estimate.se))
                .term("estimate", v.estimate.mean)
                .term("bias_bound", v.bias_bound),
        );
        report.figures.push(Figure::Lines {
            name: "variation_drifted_bm".into(),
            x_label: "t".into(),
            y_label: "Var_X(t)".into(),
            log_log: false,
            series: vec![
                Series { label: "estimate".into(), x: v.times.clone(), y: v.cumulative.clone() },
                Series { label: "exact".into(), x: v.times.clone(), y: v.times.clone() },
            ],
        });
    }

    if params.wants("bm") {
        let model = ModelSpec::brownian(1.0);
        let (e, coarse) = coarse_ensemble(&model, &fine, factor, params, exec, |_, _| Ok(()))?;
        let v = conditional_variation(&e, &coarse, binning, exec)?;
        report.push(
            Check::at_most("martingale_estimate_within_bias", v.estimate.mean, v.bias_bound, Some(v.estimate.se))
                .term("bias_bound", v.bias_bound),
        );
    }

    if params.wants("ou") {
        // Reversed variation of A_t = ∫_0^t θ·Lf ds with θ ≡ 1 on OU, bounded
        // by E∫|θ Lf| ds.
        let model = ModelSpec::ornstein_uhlenbeck(1.0, 1.0);
        let f = Bump::new(0.0, 1.5, 1.0);
        let theta = |_: f64, _: f64| 1.0;
        let mut a = Vec::new();
        let mut abs_total = Vec::new();
        let (e, coarse) = coarse_ensemble(&model, &fine, factor, params, exec, |chunk, idx| {
            let rows = weighted_drift_rows(&f, &theta, chunk, &model, exec)?;
            let n = chunk.n_nodes();
            for p in 0..chunk.n_paths() {
                a.extend(idx.iter().map(|&k| rows[p * n + k]));
            }
            abs_total.extend(exec.map(chunk.n_paths(), |p| {
                let path = chunk.path(p);
                path.segments()
                    .iter()
                    .map(|s| {
                        let (t, x) = (s.t0, s.x_left);
                        let sigma = model.vol(t, x);
                        let lf = f.d_t(t, x) + 0.5 * sigma * sigma * f.d_xx(t, x) + model.drift(t, x) * f.d_x(t, x);
                        theta(t, x).abs() * lf.abs() * s.dt()
                    })
                    .sum::<f64>()
            }));
            Ok(())
        })?;
        let v = reversed_conditional_variation(&e, &a, &coarse, binning, exec)?;
        let bound = McEstimate::from_samples(&abs_total);
        report.push(
            Check::at_most(
                "reversed_variation_below_total_variation",
                v.estimate.mean,
                bound.mean + 3.0 * bound.se,
                Some(v.estimate.se),
            )
            .term("reversed_variation", v.estimate.mean)
            .term("bias_bound", v.bias_bound)
            .term("abs_measure_of_theta", bound.mean)
            .term("abs_measure_se", bound.se),
        );
    }
    report.note(format!(
        "Conditional variations over {COARSE_STEPS} coarse steps with {} equal-mass bins per step.",
        binning.bins
    ));
    Ok(report)
}
