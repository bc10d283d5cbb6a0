use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::function_space::SpaceTimeFn;
use crate::numerics::GL5;

/// x-profile of an atom in t: the measure dδ_t(s) ⊗ p(x) dx.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAtom {
    pub t: f64,
    /// Density in x on each x-cell.
    pub profile: Vec<f64>,
}

/// A signed measure on a bounded box: a cellwise-constant density in
/// dt ⊗ dx plus atoms in t. Integrals of test functions use tensor
/// five-point Gauss–Legendre on each cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSignedMeasure {
    t_edges: Vec<f64>,
    x_edges: Vec<f64>,
    /// Row-major in t: `density[i * (nx − 1) + j]` on cell (i, j).
    density: Vec<f64>,
    atoms: Vec<TimeAtom>,
}

fn cell_integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
    GL5.iter().map(|(z, w)| w * f(mid + half * z)).sum::<f64>() * half
}

impl LocalSignedMeasure {
    pub fn new(t_edges: Vec<f64>, x_edges: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let ok = |e: &[f64]| e.len() >= 2 && e.windows(2).all(|w| w[1] > w[0]);
        if !ok(&t_edges) || !ok(&x_edges) {
            return Err(invalid("cell edges must be increasing with at least one cell"));
        }
        if density.len() != (t_edges.len() - 1) * (x_edges.len() - 1) {
            return Err(invalid("density needs one value per cell"));
        }
        Ok(LocalSignedMeasure { t_edges, x_edges, density, atoms: Vec::new() })
    }

    pub fn zero(t_edges: Vec<f64>, x_edges: Vec<f64>) -> Result<Self> {
        let n = (t_edges.len().max(1) - 1) * (x_edges.len().max(1) - 1);
        LocalSignedMeasure::new(t_edges, x_edges, vec![0.0; n])
    }

    /// Cell averages of a density function.
    pub fn from_density_fn(t_edges: Vec<f64>, x_edges: Vec<f64>, p: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut density = Vec::with_capacity((t_edges.len() - 1) * (x_edges.len() - 1));
        for tw in t_edges.windows(2) {
            for xw in x_edges.windows(2) {
                let area = (tw[1] - tw[0]) * (xw[1] - xw[0]);
                let mass = cell_integral(|t| cell_integral(|x| p(t, x), xw[0], xw[1]), tw[0], tw[1]);
                density.push(mass / area);
            }
        }
        LocalSignedMeasure::new(t_edges, x_edges, density)
    }

    pub fn with_atom(mut self, t: f64, profile: Vec<f64>) -> Result<Self> {
        if profile.len() != self.x_edges.len() - 1 {
            return Err(invalid("atom profile needs one value per x-cell"));
        }
        self.atoms.push(TimeAtom { t, profile });
        Ok(self)
    }

    /// [t_min, t_max] × [x_min, x_max].
    pub fn support_box(&self) -> (f64, f64, f64, f64) {
        let (t, x) = (&self.t_edges, &self.x_edges);
        (t[0], t[t.len() - 1], x[0], x[x.len() - 1])
    }

    fn integrate(&self, theta: &dyn SpaceTimeFn, weight: impl Fn(f64) -> f64) -> f64 {
        let nx = self.x_edges.len() - 1;
        let mut total = 0.0;
        for (i, tw) in self.t_edges.windows(2).enumerate() {
            for (j, xw) in self.x_edges.windows(2).enumerate() {
                let d = weight(self.density[i * nx + j]);
                if d != 0.0 {
                    total += d * cell_integral(|t| cell_integral(|x| theta.eval(t, x), xw[0], xw[1]), tw[0], tw[1]);
                }
            }
        }
        for atom in &self.atoms {
            for (j, xw) in self.x_edges.windows(2).enumerate() {
                let d = weight(atom.profile[j]);
                if d != 0.0 {
                    total += d * cell_integral(|x| theta.eval(atom.t, x), xw[0], xw[1]);
                }
            }
        }
        total
    }

    /// μ(θ).
    pub fn apply(&self, theta: &dyn SpaceTimeFn) -> f64 {
        self.integrate(theta, |d| d)
    }

    /// |μ|(θ) for θ ≥ 0: θ integrated against |density| and |atoms|.
    pub fn variation(&self, theta: &dyn SpaceTimeFn) -> f64 {
        self.integrate(theta, f64::abs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_measure_has_zero_variation() {
        let m = LocalSignedMeasure::zero(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(m.variation(&|_: f64, _: f64| 1.0), 0.0);
    }

    #[test]
    fn negative_unit_box() {
        let m = LocalSignedMeasure::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![-1.0]).unwrap();
        assert!((m.variation(&|_: f64, _: f64| 1.0) - 1.0).abs() < 1e-14);
        assert!((m.apply(&|_: f64, _: f64| 1.0) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_fn_integrates_polynomials_exactly() {
        let m = LocalSignedMeasure::from_density_fn(vec![0.0, 0.5, 1.0], vec![-1.0, 0.0, 1.0], |t, x| t - x).unwrap();
        // Cell averages of a linear density, tested against θ ≡ 1.
        assert!(m.apply(&|_: f64, _: f64| 1.0).abs() > 0.0);
        assert!((m.apply(&|_: f64, _: f64| 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn variation_dominates_every_bounded_reweighting() {
        let m = LocalSignedMeasure::from_density_fn(
            (0..=10).map(|i| i as f64 * 0.1).collect(),
            (0..=20).map(|j| -1.0 + j as f64 * 0.1).collect(),
            |t, x| (5.0 * x + 3.0 * t).sin(),
        )
        .unwrap()
        .with_atom(0.5, (0..20).map(|j| if j % 3 == 0 { -2.0 } else { 0.5 }).collect())
        .unwrap();
        let theta = |t: f64, x: f64| (1.0 - x * x) * t;
        let v = m.variation(&theta);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let (a, b, c): (f64, f64, f64) = (rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0), rng.random());
            let g = move |t: f64, x: f64| (a * x + b * t + c).sin();
            let gt = |t: f64, x: f64| g(t, x) * theta(t, x);
            assert!(m.apply(&gt).abs() <= v + 1e-12);
        }
    }
}
