use serde::{Deserialize, Serialize};

use super::qv::node_indices;
use crate::error::{invalid, Result};
use crate::exec::{Exec, McEstimate};
use crate::process_models::{Partition, PathEnsemble};

/// Equal-mass binning of a conditioning variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub bins: usize,
    /// Bins with fewer paths are merged into a neighbour.
    pub min_occupancy: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Binning { bins: 64, min_occupancy: 32 }
    }
}

/// Binned estimate of a conditional variation along a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondVariation {
    pub times: Vec<f64>,
    /// Estimate accumulated up to each partition node.
    pub cumulative: Vec<f64>,
    /// Total estimate with the standard error of the per-path sum
    /// Σ_k Z_k ΔX_k for the chosen signs Z_k.
    pub estimate: McEstimate,
    /// Σ_k Σ_b w_b SE_b: the estimator's positive bias from replacing
    /// |E[ΔX | bin]| by |bin mean| is at most this.
    pub bias_bound: f64,
    /// Number of bins merged for low occupancy, over all steps.
    pub merged_bins: usize,
}

/// Contiguous groups of path indices sorted by `key`: equal-mass, never
/// splitting tied keys, and each at least `min_occupancy` large when
/// possible.
fn bin_groups(key: &[f64], binning: Binning) -> (Vec<Vec<usize>>, usize) {
    let n = key.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
    let bins = binning.bins.clamp(1, n.max(1));
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(bins);
    let mut start = 0;
    for b in 1..=bins {
        let mut end = (b * n) / bins;
        while end < n && end > 0 && key[order[end]] == key[order[end - 1]] {
            end += 1;
        }
        if end > start {
            groups.push(order[start..end].to_vec());
            start = end;
        }
    }
    let mut merged = 0;
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
    for g in groups {
        match out.last_mut() {
            Some(last) if last.len() < binning.min_occupancy || g.len() < binning.min_occupancy => {
                last.extend(g);
                merged += 1;
            }
            _ => out.push(g),
        }
    }
    (out, merged)
}

struct StepResult {
    signs: Vec<f64>,
    value: f64,
    bias: f64,
    merged: usize,
}

/// Σ_b w_b |mean_b(v)| with bins on `key`, and the per-path sign of the
/// path's bin mean.
fn binned_step(key: &[f64], v: &[f64], binning: Binning) -> StepResult {
    let n = key.len() as f64;
    let (groups, merged) = bin_groups(key, binning);
    let mut signs = vec![0.0; key.len()];
    let (mut value, mut bias) = (0.0, 0.0);
    for g in &groups {
        let vals: Vec<f64> = g.iter().map(|&i| v[i]).collect();
        let est = McEstimate::from_samples(&vals);
        let w = g.len() as f64 / n;
        let s = if est.mean > 0.0 {
            1.0
        } else if est.mean < 0.0 {
            -1.0
        } else {
            0.0
        };
        for &i in g {
            signs[i] = s;
        }
        value += w * est.mean.abs();
        bias += w * est.se;
    }
    StepResult { signs, value, bias, merged }
}

fn check_binning(binning: Binning) -> Result<()> {
    if binning.bins == 0 {
        return Err(invalid("binning needs at least one bin"));
    }
    Ok(())
}

/// Shared driver: step k uses key column `key_node(k)` and increments of
/// `series` between nodes k and k+1 of the partition.
fn variation_along(
    ensemble: &PathEnsemble,
    series: &(dyn Fn(usize, usize) -> f64 + Sync),
    partition: &Partition,
    binning: Binning,
    reversed: bool,
    exec: Exec,
) -> Result<CondVariation> {
    check_binning(binning)?;
    let idx = node_indices(ensemble.partition().times(), partition)?;
    let n = ensemble.n_paths();
    let steps = exec.map_slice(&idx.windows(2).collect::<Vec<_>>(), |w| {
        let (a, b) = (w[0], w[1]);
        let key_node = if reversed { b } else { a };
        let key = ensemble.column(key_node);
        let v: Vec<f64> = (0..n).map(|p| series(p, b) - series(p, a)).collect();
        let step = binned_step(&key, &v, binning);
        let contrib: Vec<f64> = v.iter().zip(&step.signs).map(|(x, s)| x * s).collect();
        (step, contrib)
    });
    let mut cumulative = vec![0.0];
    let mut per_path = vec![0.0; n];
    let (mut bias_bound, mut merged_bins) = (0.0, 0);
    for (step, contrib) in steps {
        cumulative.push(cumulative.last().unwrap() + step.value);
        bias_bound += step.bias;
        merged_bins += step.merged;
        for (acc, c) in per_path.iter_mut().zip(contrib) {
            *acc += c;
        }
    }
    let mut estimate = McEstimate::from_samples(&per_path);
    estimate.mean = *cumulative.last().unwrap();
    Ok(CondVariation { times: partition.times().to_vec(), cumulative, estimate, bias_bound, merged_bins })
}

/// Var_X(t) ≈ Σ_k E|E[X_{t_{k+1}} − X_{t_k} | X_{t_k}]|, the supremum over
/// previsible signs realized by ξ_k = sign(E[ΔX | X_{t_k}]) for Markov X,
/// with the inner expectation estimated by bin means.
///
/// Coarser bins bias the estimate down (conditioning on less); finite bins
/// bias it up by at most `bias_bound`.
pub fn conditional_variation(
    ensemble: &PathEnsemble,
    partition: &Partition,
    binning: Binning,
    exec: Exec,
) -> Result<CondVariation> {
    let n = ensemble.n_nodes();
    let values = ensemble.values();
    variation_along(ensemble, &|p, k| values[p * n + k], partition, binning, false, exec)
}

/// V_X^r(A) ≈ Σ_k E|E[A_{t_k} − A_{t_{k−1}} | X_{t_k}]| for per-path drift
/// series `a` (row-major, one row per path on the ensemble nodes).
///
/// Conditioning on the later state gives a feasible sign Z_k, so the
/// estimate is a lower bound on V_X^r(A) up to the binning bias.
pub fn reversed_conditional_variation(
    ensemble: &PathEnsemble,
    a: &[f64],
    partition: &Partition,
    binning: Binning,
    exec: Exec,
) -> Result<CondVariation> {
    let n = ensemble.n_nodes();
    if a.len() != n * ensemble.n_paths() {
        return Err(invalid(format!(
            "drift series has {} values, expected {} paths × {} nodes",
            a.len(),
            ensemble.n_paths(),
            n
        )));
    }
    variation_along(ensemble, &|p, k| a[p * n + k], partition, binning, true, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_models::{simulate, ModelSpec};

    fn coarse(p: &Partition, factor: usize) -> Partition {
        p.coarsen(factor).unwrap().0
    }

    #[test]
    fn bins_have_equal_mass_and_keep_ties_together() {
        let key: Vec<f64> = (0..100).map(|i| (i / 10) as f64).collect();
        let (groups, merged) = bin_groups(&key, Binning { bins: 7, min_occupancy: 1 });
        assert_eq!(merged, 0);
        assert_eq!(groups.iter().map(Vec::len).sum::<usize>(), 100);
        for g in &groups {
            let k0 = key[g[0]];
            assert!(groups.iter().filter(|h| h.iter().any(|&i| key[i] == k0)).count() == 1);
        }
    }

    #[test]
    fn small_bins_are_merged() {
        let key: Vec<f64> = (0..100).map(f64::from).collect();
        let (groups, merged) = bin_groups(&key, Binning { bins: 20, min_occupancy: 12 });
        assert!(merged > 0);
        assert!(groups.iter().all(|g| g.len() >= 12));
    }

    #[test]
    fn unit_drift_has_unit_variation() {
        let p = Partition::uniform(1.0, 100).unwrap();
        let e = simulate(&ModelSpec::drifted_brownian(1.0, 1.0), &p, 20_000, 5).unwrap();
        let v = conditional_variation(&e, &coarse(&p, 10), Binning::default(), Exec::default()).unwrap();
        let tol = v.bias_bound + 3.0 * v.estimate.se;
        assert!((v.estimate.mean - 1.0).abs() < tol, "{v:?}");
        assert!(v.cumulative.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn martingale_variation_is_within_bias_and_shrinks() {
        let p = Partition::uniform(1.0, 10).unwrap();
        let m = ModelSpec::brownian(1.0);
        let mut last = f64::INFINITY;
        for n in [2_000, 20_000] {
            let e = simulate(&m, &p, n, 6).unwrap();
            let v = conditional_variation(&e, &p, Binning::default(), Exec::default()).unwrap();
            assert!(v.estimate.mean <= v.bias_bound, "{v:?}");
            assert!(v.estimate.mean < last);
            last = v.estimate.mean;
        }
    }

    #[test]
    fn reversed_variation_trivial_cases() {
        let p = Partition::uniform(1.0, 10).unwrap();
        let e = simulate(&ModelSpec::brownian(1.0), &p, 500, 7).unwrap();
        let zero = vec![0.0; e.values().len()];
        let v = reversed_conditional_variation(&e, &zero, &p, Binning::default(), Exec::default()).unwrap();
        assert_eq!(v.estimate.mean, 0.0);
        assert_eq!(v.bias_bound, 0.0);
        let times: Vec<f64> = (0..e.n_paths()).flat_map(|_| p.times().to_vec()).collect();
        let v = reversed_conditional_variation(&e, &times, &p, Binning::default(), Exec::default()).unwrap();
        assert!((v.estimate.mean - 1.0).abs() < 1e-12);
        assert!(reversed_conditional_variation(&e, &times[1..], &p, Binning::default(), Exec::default()).is_err());
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let p = Partition::uniform(1.0, 20).unwrap();
        let e = simulate(&ModelSpec::ornstein_uhlenbeck(1.0, 1.0), &p, 3000, 8).unwrap();
        let a = conditional_variation(&e, &p, Binning::default(), Exec::Parallel).unwrap();
        let b = conditional_variation(&e, &p, Binning::default(), Exec::Sequential).unwrap();
        assert_eq!(a, b);
    }
}
