use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{gaussian_call, norm_cdf, norm_pdf, ols_slope};
use crate::process_models::ModelSpec;
use crate::smooth::{FnSmooth, Smooth};

/// How the partials in the backward residual are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Differencing {
    /// The supplied partials of f.
    Analytic,
    /// Forward difference in t, central differences in x, from values of f
    /// at the grid nodes only.
    FiniteDifference,
}

/// f_{,1} + ½σ²f_{,22} + b f_{,2} on the interior nodes: every t-node but
/// the last, every x-node but the two ends. Row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualGrid {
    pub t_nodes: Vec<f64>,
    pub x_nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub max_abs: f64,
}

pub fn backward_residual(
    model: &ModelSpec,
    f: &dyn Smooth,
    t_nodes: &[f64],
    x_nodes: &[f64],
    differencing: Differencing,
) -> Result<ResidualGrid> {
    if model.has_jumps() {
        return Err(invalid("the backward residual is defined for continuous models only"));
    }
    let ordered = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    if t_nodes.len() < 2 || x_nodes.len() < 3 || !ordered(t_nodes) || !ordered(x_nodes) {
        return Err(invalid("residual grid needs ≥2 increasing t-nodes and ≥3 increasing x-nodes"));
    }
    let ts = &t_nodes[..t_nodes.len() - 1];
    let xs = &x_nodes[1..x_nodes.len() - 1];
    let mut values = Vec::with_capacity(ts.len() * xs.len());
    for (i, &t) in ts.iter().enumerate() {
        for (jj, &x) in xs.iter().enumerate() {
            let j = jj + 1;
            let (f1, f2, f22) = match differencing {
                Differencing::Analytic => (f.d_t(t, x), f.d_x(t, x), f.d_xx(t, x)),
                Differencing::FiniteDifference => {
                    let dt = t_nodes[i + 1] - t;
                    let (xl, xr) = (x_nodes[j - 1], x_nodes[j + 1]);
                    let (hl, hr) = (x - xl, xr - x);
                    let (fl, fc, fr) = (f.value(t, xl), f.value(t, x), f.value(t, xr));
                    let f1 = (f.value(t + dt, x) - fc) / dt;
                    let f2 = (fr - fl) / (hl + hr);
                    let f22 = 2.0 * ((fr - fc) / hr - (fc - fl) / hl) / (hl + hr);
                    (f1, f2, f22)
                }
            };
            let s = model.vol(t, x);
            values.push(f1 + 0.5 * s * s * f22 + model.drift(t, x) * f2);
        }
    }
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ResidualGrid { t_nodes: ts.to_vec(), x_nodes: xs.to_vec(), values, max_abs })
}

/// Max-abs finite-difference residual on uniform grids with steps
/// h·2^{-level} in both t and x, and the log-log slope of error against h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub steps: Vec<f64>,
    pub max_abs: Vec<f64>,
    pub slope: f64,
}

pub fn residual_refinement(
    model: &ModelSpec,
    f: &dyn Smooth,
    t_range: (f64, f64),
    x_range: (f64, f64),
    h: f64,
    levels: usize,
) -> Result<Refinement> {
    let mut steps = Vec::with_capacity(levels);
    let mut max_abs = Vec::with_capacity(levels);
    for level in 0..levels {
        let hk = h / (1u64 << level) as f64;
        let nodes = |(a, b): (f64, f64)| -> Vec<f64> {
            let n = ((b - a) / hk).round() as usize;
            (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
        };
        let r = backward_residual(model, f, &nodes(t_range), &nodes(x_range), Differencing::FiniteDifference)?;
        steps.push(hk);
        max_abs.push(r.max_abs);
    }
    let lx: Vec<f64> = steps.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = max_abs.iter().map(|v| v.ln()).collect();
    Ok(Refinement { slope: ols_slope(&lx, &ly), steps, max_abs })
}

/// f(t, x) = E[(x + σ(W_T − W_t) − K)_+], the conditional expectation of a
/// call payoff under Brownian motion with volatility σ.
pub fn gaussian_call_price(strike: f64, horizon: f64, sigma: f64) -> FnSmooth {
    let sd = move |t: f64| sigma * (horizon - t).max(0.0).sqrt();
    let gamma = move |t: f64, x: f64| {
        let s = sd(t);
        norm_pdf((x - strike) / s) / s
    };
    FnSmooth::new(
        move |t, x| gaussian_call(x, sd(t), strike),
        move |t, x| -0.5 * sigma * sigma * gamma(t, x),
        move |t, x| norm_cdf((x - strike) / sd(t)),
        gamma,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::{Identity, Square};

    fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn identity_and_square_under_brownian_motion() {
        let m = ModelSpec::brownian(1.0);
        let (ts, xs) = (nodes(0.0, 1.0, 10), nodes(-2.0, 2.0, 20));
        for d in [Differencing::Analytic, Differencing::FiniteDifference] {
            let r = backward_residual(&m, &Identity, &ts, &xs, d).unwrap();
            assert!(r.max_abs < 1e-12);
            let r = backward_residual(&m, &Square, &ts, &xs, d).unwrap();
            assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-9));
            assert_eq!(r.values.len(), 10 * 19);
        }
    }

    #[test]
    fn gaussian_call_price_solves_the_backward_equation() {
        let f = gaussian_call_price(0.2, 1.0, 1.0);
        let m = ModelSpec::brownian(1.0);
        let r = backward_residual(&m, &f, &nodes(0.0, 0.8, 8), &nodes(-2.0, 2.0, 40), Differencing::Analytic).unwrap();
        assert!(r.max_abs < 1e-12);
    }

    #[test]
    fn finite_difference_residual_converges_at_first_order() {
        let f = gaussian_call_price(0.0, 1.0, 1.0);
        let r = residual_refinement(&ModelSpec::brownian(1.0), &f, (0.0, 0.5), (-2.0, 2.0), 0.1, 4).unwrap();
        assert!(r.max_abs.windows(2).all(|w| w[1] < w[0]));
        assert!(r.slope >= 0.9, "{r:?}");
    }

    #[test]
    fn jump_models_are_rejected() {
        let m = ModelSpec::jump_diffusion(1.0, 0.5, 1.0);
        assert!(backward_residual(&m, &Identity, &[0.0, 1.0], &[0.0, 1.0, 2.0], Differencing::Analytic).is_err());
    }
}
