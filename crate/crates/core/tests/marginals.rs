use driftlab_core::exec::Exec;
use driftlab_core::marginals::{
    call_surface_forward_pde, conditional_expectation_surface, estimate_call_surface, CallOracle, PdeGrid,
};
use driftlab_core::numerics::gaussian_call;
use driftlab_core::process_models::{simulate, ModelSpec, Partition};

#[test]
fn monte_carlo_surface_brackets_the_closed_form() {
    let m = ModelSpec::drifted_brownian(0.5, 1.0);
    let e = simulate(&m, &Partition::uniform(1.0, 20).unwrap(), 20_000, 2).unwrap();
    let xs: Vec<f64> = (-4..=4).map(|i| 0.5 * i as f64).collect();
    let ts = vec![0.0, 0.5, 1.0];
    let c = estimate_call_surface(&e, xs.clone(), ts.clone(), Exec::default()).unwrap();
    let raw = c.raw.as_ref().unwrap();
    let o = CallOracle::Gaussian { x0: 0.0, drift: 0.5, sigma: 1.0 };
    for (i, &t) in ts.iter().enumerate().skip(1) {
        for (j, &x) in xs.iter().enumerate() {
            let est = raw[i * xs.len() + j];
            assert!((est.mean - o.call(t, x)).abs() <= 4.0 * est.se + 1e-12, "t={t} x={x} {est:?}");
        }
    }
}

#[test]
fn forward_pde_matches_brownian_calls() {
    let grid = PdeGrid::uniform(-7.0, 7.0, 700, 1.0, 10, 1e-4);
    let c = call_surface_forward_pde(&ModelSpec::brownian(1.0), &grid).unwrap();
    let o = CallOracle::brownian();
    for (j, &x) in grid.x_nodes.iter().enumerate().filter(|(_, x)| x.abs() <= 1.0) {
        let exact = o.call(1.0, x);
        assert!((c.grid.at(10, j) - exact).abs() / exact < 5e-3, "x={x}");
    }
}

#[test]
fn backward_equation_prices_a_call() {
    let grid = PdeGrid::uniform(-7.0, 7.0, 700, 1.0, 10, 1e-4);
    let s = conditional_expectation_surface(&ModelSpec::brownian(1.0), &|x| x.max(0.0), 1.0, &grid).unwrap();
    s.check(1e-9).unwrap();
    for (j, &x) in grid.x_nodes.iter().enumerate().filter(|(_, x)| x.abs() <= 1.0) {
        assert!((s.grid.at(0, j) - gaussian_call(x, 1.0, 0.0)).abs() < 2e-3, "x={x}");
    }
}
