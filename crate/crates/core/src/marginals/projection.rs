/// Weighted least-squares nondecreasing fit (pool adjacent violators).
pub fn isotonic_regression(y: &[f64], w: &[f64]) -> Vec<f64> {
    debug_assert_eq!(y.len(), w.len());
    // Blocks of (mean, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let wsum = w1 + w2;
            *blocks.last_mut().unwrap() = ((m1 * w1 + m2 * w2) / wsum, wsum, n1 + n2);
        }
    }
    blocks.iter().flat_map(|&(m, _, n)| std::iter::repeat_n(m, n)).collect()
}

/// Project node values onto convex sequences whose slopes lie in
/// [lo_slope, hi_slope].
///
/// Slopes are made nondecreasing by Δx-weighted isotonic regression and then
/// clamped; values are rebuilt by cumulative summation with the additive
/// constant fitted by least squares. Returns the projected values and the
/// largest absolute change.
pub fn convex_projection(x: &[f64], y: &[f64], lo_slope: f64, hi_slope: f64) -> (Vec<f64>, f64) {
    let m = x.len();
    if m < 2 {
        return (y.to_vec(), 0.0);
    }
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let slopes: Vec<f64> = (0..m - 1).map(|j| (y[j + 1] - y[j]) / dx[j]).collect();
    let fitted: Vec<f64> = isotonic_regression(&slopes, &dx)
        .into_iter()
        .map(|s| s.clamp(lo_slope, hi_slope))
        .collect();
    let mut shape = Vec::with_capacity(m);
    shape.push(0.0);
    for j in 0..m - 1 {
        shape.push(shape[j] + fitted[j] * dx[j]);
    }
    let offset = y.iter().zip(&shape).map(|(a, b)| a - b).sum::<f64>() / m as f64;
    let out: Vec<f64> = shape.iter().map(|s| s + offset).collect();
    let dist = out.iter().zip(y).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
    (out, dist)
}
