use serde::{Deserialize, Serialize};

use crate::numerics::{gaussian_call, gaussian_tail, norm_pdf, poisson_weights};

/// Closed-form marginal laws for the reference models, used as oracles.
///
/// `drift` is the generator drift b; for jump models the continuous part
/// moves at b − λ·z between jumps, matching the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CallOracle {
    /// X_t = x0 + b·t + σ W_t.
    Gaussian { x0: f64, drift: f64, sigma: f64 },
    /// X_t = x0 + (b − λz)·t + σ W_t + z·N_t with N Poisson(λ).
    PoissonGaussian { x0: f64, drift: f64, sigma: f64, rate: f64, size: f64 },
}

impl CallOracle {
    pub fn brownian() -> Self {
        CallOracle::Gaussian { x0: 0.0, drift: 0.0, sigma: 1.0 }
    }

    /// Mixture components (weight, mean, sd) of the law of X_t.
    fn components(&self, t: f64) -> Vec<(f64, f64, f64)> {
        match *self {
            CallOracle::Gaussian { x0, drift, sigma } => vec![(1.0, x0 + drift * t, sigma * t.sqrt())],
            CallOracle::PoissonGaussian { x0, drift, sigma, rate, size } => {
                let lam = rate * t;
                let n_max = (lam + 12.0 * lam.sqrt() + 20.0).ceil() as usize;
                let base = x0 + (drift - rate * size) * t;
                poisson_weights(lam, n_max)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, w)| *w > 0.0)
                    .map(|(n, w)| (w, base + n as f64 * size, sigma * t.sqrt()))
                    .collect()
            }
        }
    }

    pub fn mean(&self, t: f64) -> f64 {
        match *self {
            CallOracle::Gaussian { x0, drift, .. } | CallOracle::PoissonGaussian { x0, drift, .. } => x0 + drift * t,
        }
    }

    /// C(t, x).
    pub fn call(&self, t: f64, x: f64) -> f64 {
        self.components(t).iter().map(|&(w, m, s)| w * gaussian_call(m, s, x)).sum()
    }

    /// ∂C/∂x = −P(X_t > x).
    pub fn call_dx(&self, t: f64, x: f64) -> f64 {
        -self.components(t).iter().map(|&(w, m, s)| w * gaussian_tail(m, s, x)).sum::<f64>()
    }

    /// Density p_t(x) = ∂²C/∂x². Requires σ > 0 and t > 0.
    pub fn density(&self, t: f64, x: f64) -> f64 {
        self.components(t).iter().map(|&(w, m, s)| w * norm_pdf((x - m) / s) / s).sum()
    }

    /// ∂p/∂x, used for discretisation error bounds.
    pub fn density_dx(&self, t: f64, x: f64) -> f64 {
        self.components(t)
            .iter()
            .map(|&(w, m, s)| {
                let z = (x - m) / s;
                -w * z * norm_pdf(z) / (s * s)
            })
            .sum()
    }

    /// ∂²p/∂x².
    pub fn density_dxx(&self, t: f64, x: f64) -> f64 {
        self.components(t)
            .iter()
            .map(|&(w, m, s)| {
                let z = (x - m) / s;
                w * (z * z - 1.0) * norm_pdf(z) / (s * s * s)
            })
            .sum()
    }

    /// ∂C/∂t.
    ///
    /// Gaussian: ½σ² p + b·P(X_t > x). With jumps the Poisson weights move as
    /// well: ∂_t C = Σ_n [w_n' C_n + w_n ∂_t C_n].
    pub fn call_dt(&self, t: f64, x: f64) -> f64 {
        match *self {
            CallOracle::Gaussian { drift, sigma, .. } => {
                0.5 * sigma * sigma * self.density(t, x) + drift * gaussian_tail(self.mean(t), sigma * t.sqrt(), x)
            }
            CallOracle::PoissonGaussian { x0, drift, sigma, rate, size } => {
                let lam = rate * t;
                let n_max = (lam + 12.0 * lam.sqrt() + 20.0).ceil() as usize;
                let w = poisson_weights(lam, n_max + 1);
                let base = x0 + (drift - rate * size) * t;
                let s = sigma * t.sqrt();
                let mut total = 0.0;
                for n in 0..=n_max {
                    let m = base + n as f64 * size;
                    let c = gaussian_call(m, s, x);
                    let dw = rate * (if n > 0 { w[n - 1] } else { 0.0 } - w[n]);
                    let z = (m - x) / s;
                    let dc = 0.5 * sigma * sigma * norm_pdf(z) / s + (drift - rate * size) * gaussian_tail(m, s, x);
                    total += dw * c + w[n] * dc;
                }
                total
            }
        }
    }
}
