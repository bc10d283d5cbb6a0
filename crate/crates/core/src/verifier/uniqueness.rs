//! Distinguishing laws that agree on every one-dimensional marginal: two
//! Brownian schemes must agree on the joint law of (X_s, X_T), while
//! √t·Z matches each marginal but not the joint law.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::report::{Check, ExperimentReport, Figure, Series};
use super::suite::{new_report, Suite, SuiteParams};
use crate::error::{invalid, Result};
use crate::exec::{Exec, McEstimate};
use crate::process_models::{simulate_range, ModelSpec, Partition};

const S: f64 = 0.5;
const T: f64 = 1.0;
/// Permutation replicates and level of the joint-law test.
const REPLICATES: usize = 199;
const LEVEL: f64 = 0.01;
/// Cut points per coordinate for the two-dimensional KS distance.
const CUTS: usize = 19;

type Pairs = Vec<(f64, f64)>;

fn euler_scheme(params: &SuiteParams, seed: u64, exec: Exec) -> Result<Pairs> {
    let model = ModelSpec::brownian(T);
    let partition = Partition::uniform(T, params.steps)?;
    let ks = partition.nearest_node(S);
    if (partition.times()[ks] - S).abs() > 1e-12 {
        return Err(invalid(format!("{} steps do not put a node at t = {S}", params.steps)));
    }
    let mut out = Vec::with_capacity(params.n_paths);
    let mut start = 0;
    while start < params.n_paths {
        let end = (start + params.chunk).min(params.n_paths);
        let e = simulate_range(&model, &partition, start..end, seed, exec)?;
        out.extend(e.paths().map(|p| (p.values[ks], p.terminal())));
        start = end;
    }
    Ok(out)
}

/// Two exact Gaussian increments from one stream.
fn increment_scheme(n: usize, seed: u64) -> Pairs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let xs = S.sqrt() * z1;
            (xs, xs + (T - S).sqrt() * z2)
        })
        .collect()
}

/// X_t = √t·Z with a single Z: Brownian marginals, perfectly correlated.
fn scaled_normal(n: usize, seed: u64) -> Pairs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (S.sqrt() * z, T.sqrt() * z)
        })
        .collect()
}

fn quantile_cuts(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    (1..=CUTS).map(|i| v[(i * v.len()) / (CUTS + 1)]).collect()
}

/// Sup over the cut grid of |F_a − F_b| for the empirical joint CDFs of
/// the two groups `labels[i] == false` / `true`.
fn ks_distance(pooled: &[(usize, usize)], labels: &[bool], n_a: usize, n_b: usize) -> f64 {
    let w = CUTS + 1;
    let mut diff = vec![0.0; w * w];
    for (&(i, j), &b) in pooled.iter().zip(labels) {
        diff[i * w + j] += if b { -1.0 / n_b as f64 } else { 1.0 / n_a as f64 };
    }
    // Cumulative sums over cells with index ≤ (i, j) give F_a − F_b at the cuts.
    for i in 0..w {
        for j in 0..w {
            let mut v = diff[i * w + j];
            if i > 0 {
                v += diff[(i - 1) * w + j];
            }
            if j > 0 {
                v += diff[i * w + j - 1];
            }
            if i > 0 && j > 0 {
                v -= diff[(i - 1) * w + j - 1];
            }
            diff[i * w + j] = v;
        }
    }
    diff.iter().fold(0.0, |m, d| m.max(d.abs()))
}

#[derive(Debug, Clone, Copy)]
struct JointTest {
    distance: f64,
    critical: f64,
    p_value: f64,
}

/// Two-sample KS distance on the joint law with a permutation threshold.
fn joint_test(a: &[(f64, f64)], b: &[(f64, f64)], seed: u64, exec: Exec) -> JointTest {
    let all: Vec<(f64, f64)> = a.iter().chain(b).copied().collect();
    let cx = quantile_cuts(all.iter().map(|p| p.0).collect());
    let cy = quantile_cuts(all.iter().map(|p| p.1).collect());
    let cell = |v: f64, cuts: &[f64]| cuts.partition_point(|&c| c < v);
    let pooled: Vec<(usize, usize)> = all.iter().map(|&(x, y)| (cell(x, &cx), cell(y, &cy))).collect();
    let labels: Vec<bool> = (0..all.len()).map(|i| i >= a.len()).collect();
    let distance = ks_distance(&pooled, &labels, a.len(), b.len());
    let mut reps = exec.map(REPLICATES, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let mut l = labels.clone();
        l.shuffle(&mut rng);
        ks_distance(&pooled, &l, a.len(), b.len())
    });
    let exceed = reps.iter().filter(|&&d| d >= distance).count();
    reps.sort_by(f64::total_cmp);
    let k = (((1.0 - LEVEL) * (REPLICATES + 1) as f64).ceil() as usize).clamp(1, REPLICATES);
    JointTest { distance, critical: reps[k - 1], p_value: (exceed + 1) as f64 / (REPLICATES + 1) as f64 }
}

/// Largest |ΔC(t, x)| / combined SE over strikes and both times.
fn marginal_z(a: &[(f64, f64)], b: &[(f64, f64)], strikes: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for pick in [|p: &(f64, f64)| p.0, |p: &(f64, f64)| p.1] {
        for &k in strikes {
            let ea = McEstimate::from_samples(&a.iter().map(|p| (pick(p) - k).max(0.0)).collect::<Vec<_>>());
            let eb = McEstimate::from_samples(&b.iter().map(|p| (pick(p) - k).max(0.0)).collect::<Vec<_>>());
            worst = worst.max((ea.mean - eb.mean).abs() / ea.combined_se(&eb));
        }
    }
    worst
}

pub(crate) fn uniqueness_suite(params: &SuiteParams, exec: Exec) -> Result<ExperimentReport> {
    let mut report = new_report(Suite::Uniqueness, params)?;
    let n = params.n_paths;
    let a = euler_scheme(params, params.seed, exec)?;
    let b = increment_scheme(n, params.seed ^ 0x5eed_0001);
    let control = scaled_normal(n, params.seed ^ 0x5eed_0002);
    let strikes: Vec<f64> = (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect();
    let perm_seed = params.seed ^ 0x5eed_0003;

    let zab = marginal_z(&a, &b, &strikes);
    report.push(Check::at_most("schemes_marginal_max_z", zab, 3.0, None));
    let ab = joint_test(&a, &b, perm_seed, exec);
    report.push(
        Check::at_most("schemes_joint_ks", ab.distance, ab.critical, None)
            .term("p_value", ab.p_value)
            .term("level", LEVEL),
    );

    let zc = marginal_z(&a, &control, &strikes);
    report.push(Check::at_most("control_marginal_max_z", zc, 3.0, None));
    let ac = joint_test(&a, &control, perm_seed, exec);
    report.push(
        Check::exceeds("control_joint_ks", ac.distance, ac.critical, None)
            .term("p_value", ac.p_value)
            .term("level", LEVEL),
    );

    let again = euler_scheme(params, params.seed, exec)?;
    report.push(Check::holds("same_seed_identical", again == a));

    report.figures.push(Figure::Lines {
        name: "uniqueness_ks".into(),
        x_label: "comparison (0 = schemes, 1 = control)".into(),
        y_label: "KS distance".into(),
        log_log: false,
        series: vec![
            Series { label: "distance".into(), x: vec![0.0, 1.0], y: vec![ab.distance, ac.distance] },
            Series { label: "critical".into(), x: vec![0.0, 1.0], y: vec![ab.critical, ac.critical] },
        ],
    });
    report.note(format!(
        "Joint law of (X_{S}, X_{T}); KS distance on a {CUTS}×{CUTS} pooled-quantile grid, {REPLICATES} label permutations, level {LEVEL}."
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_have_zero_distance() {
        let a = increment_scheme(500, 1);
        let t = joint_test(&a, &a, 2, Exec::default());
        assert_eq!(t.distance, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn control_is_detected_on_small_samples() {
        let params = SuiteParams { n_paths: 2_000, steps: 20, seed: 9, chunk: 700, models: None };
        let r = uniqueness_suite(&params, Exec::default()).unwrap();
        assert!(r.passed(), "{}", r.to_json().unwrap());
    }
}
