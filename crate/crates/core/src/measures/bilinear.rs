use serde::{Deserialize, Serialize};

use super::refine::{sample_rows, union_nodes, union_times};
use crate::exec::pairwise_sum;
use crate::function_space::{CompactGridFunction, GridFunction};

/// The three addends of μ_[f,g](θ) = t1 − t2 − t3 with
/// t1 = ∬ f_{,2} g_{,2} d_tθ dx, t2 = ∬ θ⁻_{,2} f⁻_{,2} d_tg dx,
/// t3 = ∬ g⁻_{,2} θ⁻_{,2} d_tf dx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearTerms {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub value: f64,
}

pub fn mu_bilinear(f: &GridFunction, g: &GridFunction, theta: &CompactGridFunction) -> f64 {
    mu_bilinear_terms(f, g, theta).value
}

/// Evaluate μ_[f,g](θ) on the common refinement of the three grids.
///
/// Within a refined cell every x-derivative is constant and every time
/// increment is linear in x, so the trapezoid rule per cell is exact. t2 and
/// t3 come from the same routine with f and g exchanged, and the result is
/// t1 − (t2 + t3), so swapping f and g reproduces the value bit for bit.
pub fn mu_bilinear_terms(f: &GridFunction, g: &GridFunction, theta: &CompactGridFunction) -> BilinearTerms {
    let th = theta.grid();
    let txs = th.x_nodes();
    let xs = union_nodes(&[f.x_nodes(), g.x_nodes(), txs], txs[0], txs[txs.len() - 1]);
    let ts = union_times(&[f.t_nodes(), g.t_nodes(), th.t_nodes()]);
    let fv = sample_rows(f, &ts, &xs);
    let gv = sample_rows(g, &ts, &xs);
    let tv = sample_rows(th, &ts, &xs);

    let slope = |row: &[f64], c: usize| (row[c + 1] - row[c]) / (xs[c + 1] - xs[c]);
    // Σ_k ∫ a⁻_{,2} θ⁻_{,2} Δ_k b dx.
    let cross = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        let per_atom: Vec<f64> = (1..ts.len())
            .map(|k| {
                (0..xs.len() - 1)
                    .map(|c| {
                        let len = xs[c + 1] - xs[c];
                        let db = (b[k][c] - b[k - 1][c]) + (b[k][c + 1] - b[k - 1][c + 1]);
                        slope(&tv[k - 1], c) * slope(&a[k - 1], c) * db * 0.5 * len
                    })
                    .sum()
            })
            .collect();
        pairwise_sum(&per_atom)
    };
    let per_atom: Vec<f64> = (1..ts.len())
        .map(|k| {
            (0..xs.len() - 1)
                .map(|c| {
                    let len = xs[c + 1] - xs[c];
                    let dth = (tv[k][c] - tv[k - 1][c]) + (tv[k][c + 1] - tv[k - 1][c + 1]);
                    slope(&fv[k], c) * slope(&gv[k], c) * dth * 0.5 * len
                })
                .sum()
        })
        .collect();
    let t1 = pairwise_sum(&per_atom);
    let t2 = cross(&fv, &gv);
    let t3 = cross(&gv, &fv);
    BilinearTerms { t1, t2, t3, value: t1 - (t2 + t3) }
}
