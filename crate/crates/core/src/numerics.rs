//! Small numerical helpers shared across modules: Gaussian closed forms,
//! a tridiagonal solver and fixed-order Gauss–Legendre rules.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// E[(Y − k)_+] for Y ~ N(mean, sd²). Degenerates to (mean − k)_+ at sd = 0.
pub fn gaussian_call(mean: f64, sd: f64, k: f64) -> f64 {
    if sd <= 0.0 {
        return (mean - k).max(0.0);
    }
    let d = (mean - k) / sd;
    (mean - k) * norm_cdf(d) + sd * norm_pdf(d)
}

/// P(Y > k) for Y ~ N(mean, sd²).
pub fn gaussian_tail(mean: f64, sd: f64, k: f64) -> f64 {
    if sd <= 0.0 {
        return if mean > k { 1.0 } else { 0.0 };
    }
    norm_cdf((mean - k) / sd)
}

/// Poisson(λ) probabilities for n = 0..=n_max.
pub fn poisson_weights(lambda: f64, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut p = (-lambda).exp();
    for n in 0..=n_max {
        if n > 0 {
            p *= lambda / n as f64;
        }
        w.push(p);
    }
    w
}

/// Solve a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is unused) and
/// `upper[i]` multiplies `x[i+1]` (so the last entry is unused).
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::Invalid("tridiagonal bands must have equal length".into()));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return Err(singular());
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return Err(singular());
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

fn singular() -> Error {
    Error::Scheme {
        reason: "singular tridiagonal system".into(),
        hint: "a smaller time step or wider x-grid".into(),
    }
}

/// Five-point Gauss–Legendre nodes and weights on [-1, 1].
pub const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Integrate `f` over [a, b] with the five-point Gauss–Legendre rule.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5.iter().map(|(z, w)| w * f(mid + half * z)).sum::<f64>() * half
}

/// Composite Gauss–Legendre over `panels` equal panels.
pub fn gauss_legendre_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            gauss_legendre(&f, lo, lo + h)
        })
        .sum()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Index `i` with `nodes[i] <= x < nodes[i+1]`, clamped to `[0, len-1]`.
/// Returns `None` when `x < nodes[0]`.
pub fn bracket(nodes: &[f64], x: f64) -> Option<usize> {
    if x < nodes[0] {
        return None;
    }
    Some(nodes.partition_point(|&v| v <= x) - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn call_at_the_money() {
        // E[(Z)_+] = φ(0) for a standard normal.
        assert!((gaussian_call(0.0, 1.0, 0.0) - norm_pdf(0.0)).abs() < 1e-15);
    }

    #[test]
    fn call_parity() {
        // C(k) − C_put(k) = mean − k; the put is C evaluated on the reflection.
        let (m, s, k) = (0.3, 0.7, -0.2);
        let put = gaussian_call(-m, s, -k);
        assert!((gaussian_call(m, s, k) - put - (m - k)).abs() < 1e-14);
    }

    #[test]
    fn thomas_solves_poisson_problem() {
        let n = 5;
        let lower = vec![-1.0; n];
        let diag = vec![2.0; n];
        let upper = vec![-1.0; n];
        let rhs = vec![1.0; n];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for i in 0..n {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            assert!((2.0 * x[i] - left - right - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let v = gauss_legendre(|x| x.powi(9) + x.powi(8), 0.0, 1.0);
        assert!((v - (0.1 + 1.0 / 9.0)).abs() < 1e-14);
    }

    #[test]
    fn poisson_weights_sum_to_one() {
        let s: f64 = poisson_weights(2.0, 60).iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bracket_finds_segment() {
        let nodes = [0.0, 1.0, 2.0];
        assert_eq!(bracket(&nodes, -0.5), None);
        assert_eq!(bracket(&nodes, 0.0), Some(0));
        assert_eq!(bracket(&nodes, 1.5), Some(1));
        assert_eq!(bracket(&nodes, 2.0), Some(2));
        assert_eq!(bracket(&nodes, 7.0), Some(2));
    }
}
