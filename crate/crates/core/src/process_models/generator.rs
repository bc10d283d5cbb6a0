use serde::{Deserialize, Serialize};

use super::{JumpSize, ModelSpec};
use crate::error::{Error, Result};
use crate::numerics::{norm_cdf, norm_pdf};
use crate::smooth::Smooth;

/// Accuracy budget for the jump integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureBudget {
    /// Target absolute error of the truncated integral.
    pub abs_tol: f64,
    /// Normal jump sizes are truncated to mean ± `normal_sds`·sd.
    pub normal_sds: f64,
}

impl Default for QuadratureBudget {
    fn default() -> Self {
        QuadratureBudget { abs_tol: 1e-10, normal_sds: 10.0 }
    }
}

/// L_t f(x) together with the accuracy information of its jump integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorValue {
    pub value: f64,
    pub diffusion: f64,
    pub drift: f64,
    pub jump: f64,
    /// Quadrature error estimate of the truncated jump integral.
    pub quadrature_error: f64,
    /// Bound on the neglected tail of the jump integral from
    /// |f(y) − f(x) − (y−x)f'(x)| ≤ sup|f''|·(y−x)²/2.
    pub tail_bound: f64,
}

/// Apply the generator L_t to a smooth `f` at (t, x).
///
/// `sup_f_xx` bounds |f''| and is used only for the reported tail bound.
pub fn generator_apply(
    model: &ModelSpec,
    f: &dyn Smooth,
    t: f64,
    x: f64,
    sup_f_xx: f64,
    budget: QuadratureBudget,
) -> Result<GeneratorValue> {
    let sigma = model.vol(t, x);
    let diffusion = 0.5 * sigma * sigma * f.d_xx(t, x);
    let drift = model.drift(t, x) * f.d_x(t, x);
    let fx = f.value(t, x);
    let dfx = f.d_x(t, x);
    let increment = |z: f64| f.value(t, x + z) - fx - z * dfx;
    let lambda = model.intensity(t, x);
    let (jump, quadrature_error, tail_bound) = match model.jump_size {
        None => (0.0, 0.0, 0.0),
        Some(_) if lambda == 0.0 => (0.0, 0.0, 0.0),
        Some(JumpSize::Fixed { size }) => (lambda * increment(size), 0.0, 0.0),
        Some(JumpSize::Uniform { lo, hi }) => {
            let out = quadrature::double_exponential::integrate(increment, lo, hi, budget.abs_tol);
            check(out, budget)?;
            (lambda * out.integral / (hi - lo), lambda * out.error_estimate / (hi - lo), 0.0)
        }
        Some(JumpSize::Normal { mean, sd }) => {
            let k = budget.normal_sds;
            let (lo, hi) = (mean - k * sd, mean + k * sd);
            let density = |z: f64| {
                let u = (z - mean) / sd;
                (-0.5 * u * u).exp() / (sd * crate::numerics::SQRT_2PI)
            };
            let out =
                quadrature::double_exponential::integrate(|z| increment(z) * density(z), lo, hi, budget.abs_tol);
            check(out, budget)?;
            // E[Z²; |Z − mean| > k·sd] for Z ~ N(mean, sd²).
            let tail_second = mean * mean * 2.0 * norm_cdf(-k) + sd * sd * 2.0 * (k * norm_pdf(k) + norm_cdf(-k));
            (lambda * out.integral, lambda * out.error_estimate, 0.5 * lambda * sup_f_xx * tail_second)
        }
    };
    Ok(GeneratorValue {
        value: diffusion + drift + jump,
        diffusion,
        drift,
        jump,
        quadrature_error,
        tail_bound,
    })
}

fn check(out: quadrature::Output, budget: QuadratureBudget) -> Result<()> {
    if !(out.error_estimate <= budget.abs_tol.max(1e-14) * 1e3) || !out.integral.is_finite() {
        return Err(Error::Quadrature {
            residual: out.error_estimate,
            evaluations: out.num_function_evaluations as usize,
        });
    }
    Ok(())
}
