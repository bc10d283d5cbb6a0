use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::function_space::{CompactGridFunction, GridFunction, SupportBox};
use crate::marginals::CallSurface;
use crate::measures::mu_bilinear;

/// Smoothed tensor bumps tiling `domain` at each scale: scale s cuts the
/// box into s × s tiles. Each tile carries a trapezoid in x (ramps over a
/// quarter of the tile width) times a time profile ½, 1, ½ over quarters of
/// the tile duration.
pub fn theta_basis(domain: SupportBox, scales: &[usize]) -> Result<Vec<CompactGridFunction>> {
    if scales.contains(&0) || domain.t_a <= 0.0 {
        return Err(invalid("basis scales must be ≥ 1 and the domain must start after t = 0"));
    }
    let mut out = Vec::new();
    for &s in scales {
        let dt = (domain.t_b - domain.t_a) / s as f64;
        let dx = (domain.x_b - domain.x_a) / s as f64;
        for i in 0..s {
            for j in 0..s {
                let t0 = domain.t_a + dt * i as f64;
                let x0 = domain.x_a + dx * j as f64;
                let ts = vec![0.0, t0, t0 + 0.25 * dt, t0 + 0.75 * dt, t0 + dt];
                let xs = vec![x0, x0 + 0.25 * dx, x0 + 0.75 * dx, x0 + dx];
                out.push(CompactGridFunction::tensor(ts, &[0.0, 0.5, 1.0, 0.5, 0.0], xs, &[0.0, 1.0, 1.0, 0.0])?);
            }
        }
    }
    Ok(out)
}

/// ∬|θ| dt dx for a grid θ (trapezoid rule per row, exact for piecewise
/// linear rows).
pub fn theta_l1(theta: &CompactGridFunction) -> f64 {
    let g = theta.grid();
    let ts = g.t_nodes();
    let xs = g.x_nodes();
    (0..g.n_t() - 1)
        .map(|i| {
            let row = g.row(i);
            let area: f64 = (0..xs.len() - 1)
                .map(|j| {
                    let (a, b) = (row[j], row[j + 1]);
                    let h = xs[j + 1] - xs[j];
                    if a * b >= 0.0 {
                        0.5 * h * (a.abs() + b.abs())
                    } else {
                        0.5 * h * (a * a + b * b) / (a.abs() + b.abs())
                    }
                })
                .sum();
            area * (ts[i + 1] - ts[i])
        })
        .sum()
}

/// μ_[f,C](θ) for one basis element with its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisValue {
    pub index: usize,
    pub support: SupportBox,
    pub value: f64,
    pub tolerance: f64,
}

/// Tolerance policy: κ·‖θ‖_{L¹}·mesh, with κ frozen from a refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisTolerance {
    pub kappa: f64,
    pub mesh: f64,
}

impl BasisTolerance {
    pub fn of(&self, theta: &CompactGridFunction) -> f64 {
        self.kappa * theta_l1(theta) * self.mesh
    }
}

/// Evaluate μ_[f,C] over a θ-basis; f(t, X_t) is a martingale exactly when
/// all these vanish.
pub fn martingale_condition_values(
    f: &GridFunction,
    c: &CallSurface,
    basis: &[CompactGridFunction],
    tolerance: BasisTolerance,
) -> Vec<BasisValue> {
    basis
        .iter()
        .enumerate()
        .map(|(index, th)| BasisValue {
            index,
            support: th.support(),
            value: mu_bilinear(f, &c.grid, th),
            tolerance: tolerance.of(th),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::CallOracle;

    fn domain() -> SupportBox {
        SupportBox { t_a: 0.2, t_b: 0.8, x_a: -1.5, x_b: 1.5 }
    }

    #[test]
    fn basis_tiles_the_domain() {
        let b = theta_basis(domain(), &[1, 2, 4]).unwrap();
        assert_eq!(b.len(), 21);
        for th in &b {
            let s = th.support();
            assert!(s.t_a >= 0.2 - 1e-12 && s.t_b <= 0.8 + 1e-12 && s.x_a >= -1.5 - 1e-12 && s.x_b <= 1.5 + 1e-12);
        }
        // Full-box element: time integral 0.15·0.5 + 0.3 + 0.15·0.5 = 0.45,
        // space integral 3·0.75 = 2.25.
        assert!((theta_l1(&b[0]) - 0.45 * 2.25).abs() < 1e-12);
    }

    #[test]
    fn linear_time_independent_f_gives_zero() {
        let o = CallOracle::brownian();
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let xs: Vec<f64> = (0..=60).map(|j| -3.0 + 0.1 * j as f64).collect();
        let c = CallSurface::from_fn(ts.clone(), xs.clone(), |t, x| o.call(t, x), |t| o.mean(t), None).unwrap();
        let f = GridFunction::from_fn(ts, xs, |_, x| 2.0 * x - 1.0).unwrap();
        let tol = BasisTolerance { kappa: 1.0, mesh: 0.05 };
        for v in martingale_condition_values(&f, &c, &theta_basis(domain(), &[1, 2]).unwrap(), tol) {
            assert!(v.value.abs() < 1e-12, "{v:?}");
        }
    }
}
