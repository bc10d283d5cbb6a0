use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::function_space::PathValues;
use crate::process_models::{Partition, PathView};

/// A real path observed at nodes, with its recorded jumps `(t, Δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub jumps: Vec<(f64, f64)>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, jumps: Vec<(f64, f64)>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(invalid("sampled path needs one value per time"));
        }
        Ok(Self { times, values, jumps })
    }

    pub fn from_view(path: &PathView<'_>) -> Self {
        Self {
            times: path.times.to_vec(),
            values: path.values.to_vec(),
            jumps: path.jumps.iter().map(|j| (j.t, j.size())).collect(),
        }
    }

    /// Y = f(·, X) from [`eval_on_path`](crate::function_space::eval_on_path);
    /// every event with a nonzero jump of Y is recorded.
    pub fn from_values(times: &[f64], y: &PathValues) -> Self {
        Self {
            times: times.to_vec(),
            values: y.node_values.clone(),
            jumps: y
                .events
                .iter()
                .map(|e| (e.t, e.y_post - e.y_pre))
                .filter(|&(_, d)| d != 0.0)
                .collect(),
        }
    }

    /// Pointwise a·self + b·other on the same nodes; jumps at equal times
    /// are merged.
    pub fn combine(&self, a: f64, other: &SampledPath, b: f64) -> Result<SampledPath> {
        if self.times != other.times {
            return Err(invalid("paths observed on different nodes"));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        let mut jumps: Vec<(f64, f64)> = Vec::with_capacity(self.jumps.len() + other.jumps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.jumps.len() || j < other.jumps.len() {
            let next = match (self.jumps.get(i), other.jumps.get(j)) {
                (Some(&(s, dx)), Some(&(t, dy))) if same_time(s, t) => {
                    i += 1;
                    j += 1;
                    (s, a * dx + b * dy)
                }
                (Some(&(s, dx)), Some(&(t, _))) if s < t => {
                    i += 1;
                    (s, a * dx)
                }
                (Some(&(s, dx)), None) => {
                    i += 1;
                    (s, a * dx)
                }
                (_, Some(&(t, dy))) => {
                    j += 1;
                    (t, b * dy)
                }
                (None, None) => unreachable!(),
            };
            jumps.push(next);
        }
        Ok(SampledPath { times: self.times.clone(), values, jumps })
    }
}

/// Partition quadratic covariation at the partition nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvPath {
    pub times: Vec<f64>,
    /// Σ_{t_k ≤ t} (Δ_k X)(Δ_k Y).
    pub covariation: Vec<f64>,
    /// Σ_{s ≤ t} ΔX_s ΔY_s over recorded jumps.
    pub jump_ledger: Vec<f64>,
    /// covariation − jump_ledger.
    pub continuous: Vec<f64>,
}

impl QvPath {
    pub fn terminal(&self) -> f64 {
        *self.covariation.last().expect("non-empty")
    }

    pub fn terminal_continuous(&self) -> f64 {
        *self.continuous.last().expect("non-empty")
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Positions of the partition times among `times`.
pub fn node_indices(times: &[f64], partition: &Partition) -> Result<Vec<usize>> {
    partition
        .times()
        .iter()
        .map(|&t| {
            let i = times.partition_point(|&s| s < t - 1e-12 * t.abs().max(1.0));
            match times.get(i) {
                Some(&s) if same_time(s, t) => Ok(i),
                _ => Err(invalid(format!("partition time {t} is not a sampling node"))),
            }
        })
        .collect()
}

/// [X, Y]^P along `partition`, with the recorded-jump ledger removed for the
/// continuous part.
pub fn qv_partition(x: &SampledPath, y: &SampledPath, partition: &Partition) -> Result<QvPath> {
    if x.times != y.times {
        return Err(invalid("paths observed on different nodes"));
    }
    let idx = node_indices(&x.times, partition)?;
    let times = partition.times().to_vec();
    let mut covariation = Vec::with_capacity(idx.len());
    let mut jump_ledger = Vec::with_capacity(idx.len());
    let (mut cov, mut ledger) = (0.0, 0.0);
    let mut jy = 0;
    let mut jx = 0;
    for (k, &i) in idx.iter().enumerate() {
        if k > 0 {
            let p = idx[k - 1];
            cov += (x.values[i] - x.values[p]) * (y.values[i] - y.values[p]);
        }
        let t = times[k];
        while jx < x.jumps.len() && x.jumps[jx].0 <= t {
            let (s, dx) = x.jumps[jx];
            while jy < y.jumps.len() && y.jumps[jy].0 < s && !same_time(y.jumps[jy].0, s) {
                jy += 1;
            }
            if let Some(&(u, dy)) = y.jumps.get(jy) {
                if same_time(u, s) {
                    ledger += dx * dy;
                    jy += 1;
                }
            }
            jx += 1;
        }
        covariation.push(cov);
        jump_ledger.push(ledger);
    }
    let continuous = covariation.iter().zip(&jump_ledger).map(|(c, l)| c - l).collect();
    Ok(QvPath { times, covariation, jump_ledger, continuous })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::McEstimate;
    use crate::process_models::{simulate, ModelSpec};
    use proptest::prelude::*;

    #[test]
    fn deterministic_line_has_qv_t_times_mesh() {
        let p = Partition::uniform(1.0, 50).unwrap();
        let x = SampledPath::new(p.times().to_vec(), p.times().to_vec(), vec![]).unwrap();
        let q = qv_partition(&x, &x, &p).unwrap();
        assert!((q.terminal() - 1.0 * 0.02).abs() < 1e-14);
        assert!(q.covariation.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn single_jump_contributes_its_square() {
        let p = Partition::uniform(1.0, 4).unwrap();
        let values = vec![0.0, 0.0, 2.0, 2.0, 2.0];
        let x = SampledPath::new(p.times().to_vec(), values, vec![(0.4, 2.0)]).unwrap();
        let q = qv_partition(&x, &x, &p).unwrap();
        assert_eq!(q.terminal(), 4.0);
        assert_eq!(q.jump_ledger, vec![0.0, 0.0, 4.0, 4.0, 4.0]);
        assert_eq!(q.terminal_continuous(), 0.0);
    }

    #[test]
    fn coarser_partition_must_be_subset() {
        let fine = Partition::uniform(1.0, 4).unwrap();
        let x = SampledPath::new(fine.times().to_vec(), vec![0.0; 5], vec![]).unwrap();
        let odd = Partition::new(vec![0.0, 0.3, 1.0]).unwrap();
        assert!(qv_partition(&x, &x, &odd).is_err());
        let (coarse, _) = fine.coarsen(2).unwrap();
        assert!(qv_partition(&x, &x, &coarse).is_ok());
    }

    #[test]
    fn brownian_qv_has_unit_mean() {
        let p = Partition::uniform(1.0, 100).unwrap();
        let e = simulate(&ModelSpec::brownian(1.0), &p, 4000, 3).unwrap();
        let samples: Vec<f64> = e
            .paths()
            .map(|v| {
                let x = SampledPath::from_view(&v);
                qv_partition(&x, &x, &p).unwrap().terminal()
            })
            .collect();
        let est = McEstimate::from_samples(&samples);
        // Σ of 100 squared N(0, 1/100): mean 1, variance 2/100.
        assert!((est.mean - 1.0).abs() < 3.0 * est.se, "{est:?}");
        assert!((est.se - (0.02f64 / 4000.0).sqrt()).abs() < 0.2 * est.se);
    }

    #[test]
    fn variance_of_qv_shrinks_with_mesh() {
        let fine = Partition::uniform(1.0, 256).unwrap();
        let e = simulate(&ModelSpec::brownian(1.0), &fine, 2000, 9).unwrap();
        let mut vars = Vec::new();
        for factor in [8, 4, 2, 1] {
            let (p, _) = fine.coarsen(factor).unwrap();
            let s: Vec<f64> = e
                .paths()
                .map(|v| {
                    let x = SampledPath::from_view(&v);
                    qv_partition(&x, &x, &p).unwrap().terminal()
                })
                .collect();
            let est = McEstimate::from_samples(&s);
            vars.push(est.se * est.se * s.len() as f64);
        }
        assert!(vars.windows(2).all(|w| w[1] < w[0]), "{vars:?}");
        // Var = 2·mesh for Brownian increments.
        assert!((vars[3] / (2.0 / 256.0) - 1.0).abs() < 0.15);
    }

    #[test]
    fn jump_ledger_matches_recorded_jumps() {
        let p = Partition::uniform(1.0, 200).unwrap();
        let e = simulate(&ModelSpec::jump_diffusion(3.0, 0.5, 1.0), &p, 50, 5).unwrap();
        for v in e.paths() {
            let x = SampledPath::from_view(&v);
            let q = qv_partition(&x, &x, &p).unwrap();
            let expected: f64 = v.jumps.iter().map(|j| j.size() * j.size()).sum();
            assert!((q.jump_ledger.last().unwrap() - expected).abs() < 1e-12);
        }
    }

    fn path_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (prop::collection::vec(-3.0..3.0f64, 9), prop::collection::vec(-3.0..3.0f64, 9))
    }

    proptest! {
        #[test]
        fn polarization_holds((xv, yv) in path_strategy(), jx in -1.0..1.0f64, jy in -1.0..1.0f64) {
            let p = Partition::uniform(1.0, 8).unwrap();
            let (c, _) = p.coarsen(2).unwrap();
            let x = SampledPath::new(p.times().to_vec(), xv, vec![(0.3, jx)]).unwrap();
            let y = SampledPath::new(p.times().to_vec(), yv, vec![(0.3, jy), (0.7, 1.0)]).unwrap();
            let s = x.combine(1.0, &y, 1.0).unwrap();
            let xy = qv_partition(&x, &y, &c).unwrap();
            let xx = qv_partition(&x, &x, &c).unwrap();
            let yy = qv_partition(&y, &y, &c).unwrap();
            let ss = qv_partition(&s, &s, &c).unwrap();
            for k in 0..c.n_nodes() {
                let pol = (ss.covariation[k] - xx.covariation[k] - yy.covariation[k]) / 2.0;
                prop_assert!((pol - xy.covariation[k]).abs() < 1e-12);
                let led = (ss.jump_ledger[k] - xx.jump_ledger[k] - yy.jump_ledger[k]) / 2.0;
                prop_assert!((led - xy.jump_ledger[k]).abs() < 1e-12);
            }
        }

        #[test]
        fn bilinear_in_first_argument((xv, yv) in path_strategy(), a in -2.0..2.0f64) {
            let p = Partition::uniform(1.0, 8).unwrap();
            let x = SampledPath::new(p.times().to_vec(), xv, vec![]).unwrap();
            let y = SampledPath::new(p.times().to_vec(), yv, vec![]).unwrap();
            let ax = x.combine(a, &y, 0.0).unwrap();
            let lhs = qv_partition(&ax, &y, &p).unwrap().terminal();
            let rhs = a * qv_partition(&x, &y, &p).unwrap().terminal();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
