use driftlab_core::exec::{Exec, McEstimate};
use driftlab_core::function_space::{CompactGridFunction, GridFunction};
use driftlab_core::marginals::{CallOracle, CallSurface};
use driftlab_core::measures::{drift_measure_x, mu_bilinear, mu_tilde};
use driftlab_core::process_models::{simulate, ModelSpec, Partition};
use driftlab_core::smooth::{Bump, Smooth};
use driftlab_core::stochastic_calculus::ito_drift_samples;

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

fn theta() -> CompactGridFunction {
    CompactGridFunction::tensor(
        vec![0.0, 0.2, 0.3, 0.7, 0.8],
        &[0.0, 0.5, 1.0, 0.5, 0.0],
        vec![-1.0, -0.5, 1.5, 2.0],
        &[0.0, 1.0, 1.0, 0.0],
    )
    .unwrap()
}

#[test]
fn bilinear_form_is_symmetric() {
    let f = GridFunction::from_fn(uniform(0.0, 1.0, 10), uniform(-2.0, 2.0, 40), |t, x| (x - t).abs()).unwrap();
    let g = GridFunction::from_fn(uniform(0.0, 1.0, 7), uniform(-3.0, 3.0, 30), |t, x| t * x.max(0.0)).unwrap();
    let th = theta();
    assert_eq!(mu_bilinear(&f, &g, &th), mu_bilinear(&g, &f, &th));
}

#[test]
fn drift_measure_of_constant_drift() {
    let m = ModelSpec::drifted_brownian(0.8, 1.0);
    let e = simulate(&m, &Partition::uniform(1.0, 40).unwrap(), 200, 1).unwrap();
    let d = drift_measure_x(&e, &m, &|_: f64, _: f64| 1.0, Exec::default()).unwrap();
    assert!((d.mean - 0.8).abs() < 1e-12 && d.se < 1e-12, "{d:?}");
}

#[test]
fn mu_tilde_matches_the_ito_drift_of_a_smooth_bump() {
    let m = ModelSpec::drifted_brownian(1.0, 1.0);
    let e = simulate(&m, &Partition::uniform(1.0, 400).unwrap(), 20_000, 4).unwrap();
    let bump = Bump::new(0.5, 1.5, 1.0);
    let xs = uniform(-1.0, 2.0, 600);
    let f = GridFunction::time_independent(xs.clone(), xs.iter().map(|&x| bump.value(0.0, x)).collect()).unwrap();
    let o = CallOracle::Gaussian { x0: 0.0, drift: 1.0, sigma: 1.0 };
    let c = CallSurface::from_fn(uniform(0.0, 1.0, 40), uniform(-6.0, 9.0, 300), |t, x| o.call(t, x), |t| o.mean(t), None).unwrap();
    let th = theta();
    let mt = mu_tilde(&f, &th, &c, &e, &m, Exec::default()).unwrap();
    let ito = McEstimate::from_samples(&ito_drift_samples(&bump, &th, &e, &m, Exec::default()).unwrap());
    assert!((ito.mean - mt.value).abs() <= 3.0 * ito.combined_se(&McEstimate { mean: mt.value, se: mt.se, n: 0 }), "{ito:?} {}", mt.value);
    assert_eq!(mt.bound_violations, 0);
}
