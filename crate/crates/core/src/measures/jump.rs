use super::refine::union_nodes;
use crate::function_space::{CompactGridFunction, GridFunction};

/// Cells of the refinement of f's and θ's x-nodes covering the part of
/// [min(a,b), max(a,b)] where θ can have a nonzero slope.
fn cells(theta: &CompactGridFunction, f: &GridFunction, a: f64, b: f64) -> Option<Vec<f64>> {
    let txs = theta.grid().x_nodes();
    let lo = a.min(b).max(txs[0]);
    let hi = a.max(b).min(txs[txs.len() - 1]);
    (lo < hi).then(|| union_nodes(&[f.x_nodes(), txs], lo, hi))
}

/// J_t^X(θ, f) = ∫_{x_pre}^{x_post} (f(t,x) − f(t,x_post) + (x_post − x) f⁻_{,2}(t,x)) θ⁻_{,2}(t,x) dx.
///
/// The integrand is linear on each refined cell, so the trapezoid rule is
/// exact. The integral is oriented: a downward jump flips the sign.
pub fn jump_term(theta: &CompactGridFunction, f: &GridFunction, t: f64, x_pre: f64, x_post: f64) -> f64 {
    let Some(xs) = cells(theta, f, x_pre, x_post) else {
        return 0.0;
    };
    let th = theta.grid();
    let (i_f, j_f, j_th) = (f.row_index(t), f.left_row_index(t), th.left_row_index(t));
    let c = f.row_value(i_f, x_post);
    let h = |x: f64, s: f64| f.row_value(i_f, x) - c + (x_post - x) * s;
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let q = (th.row_value(j_th, b) - th.row_value(j_th, a)) / len;
        if q == 0.0 {
            continue;
        }
        let s = (f.row_value(j_f, b) - f.row_value(j_f, a)) / len;
        total += q * (h(a, s) + h(b, s)) * 0.5 * len;
    }
    if x_post < x_pre {
        -total
    } else {
        total
    }
}

/// The per-jump bound ∫ |x_post − x| (L_f + |f⁻_{,2}|) |θ⁻_{,2}| dx over the
/// jump range, with L_f the declared Lipschitz constant of f.
pub fn jump_term_bound(theta: &CompactGridFunction, f: &GridFunction, t: f64, x_pre: f64, x_post: f64) -> f64 {
    let Some(xs) = cells(theta, f, x_pre, x_post) else {
        return 0.0;
    };
    let th = theta.grid();
    let (j_f, j_th) = (f.left_row_index(t), th.left_row_index(t));
    let lf = f.lipschitz_x();
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let q = ((th.row_value(j_th, b) - th.row_value(j_th, a)) / len).abs();
        let s = ((f.row_value(j_f, b) - f.row_value(j_f, a)) / len).abs();
        // |x_post − x| is linear on the cell because x_post is a cell end or outside it.
        total += q * (lf + s) * ((x_post - a).abs() + (x_post - b).abs()) * 0.5 * len;
    }
    total
}
