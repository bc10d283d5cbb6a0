use crate::function_space::GridFunction;

/// Sorted union of node sets, restricted to [lo, hi] with both ends added.
pub(crate) fn union_nodes(sets: &[&[f64]], lo: f64, hi: f64) -> Vec<f64> {
    let mut out: Vec<f64> = sets
        .iter()
        .flat_map(|s| s.iter().copied())
        .filter(|&v| v > lo && v < hi)
        .chain([lo, hi])
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Union of t-nodes (all of them; every set starts at 0).
pub(crate) fn union_times(sets: &[&[f64]]) -> Vec<f64> {
    let mut out: Vec<f64> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Values of `f` on the tensor grid `ts × xs`, one row per entry of `ts`
/// (right-continuous lookup).
pub(crate) fn sample_rows(f: &GridFunction, ts: &[f64], xs: &[f64]) -> Vec<Vec<f64>> {
    ts.iter()
        .map(|&t| {
            let i = f.row_index(t);
            xs.iter().map(|&x| f.row_value(i, x)).collect()
        })
        .collect()
}
