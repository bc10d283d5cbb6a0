use serde::{Deserialize, Serialize};

use super::Partition;
use crate::error::{invalid, Result};

/// A recorded jump: time, pre-jump level X_{t−}, post-jump level X_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub t: f64,
    pub pre: f64,
    pub post: f64,
}

impl JumpRecord {
    pub fn size(&self) -> f64 {
        self.post - self.pre
    }
}

/// Simulated paths on a partition together with their jump records.
///
/// Path values are stored row-major (one row of `n_nodes` values per path).
/// `first_path` is the global index of row 0, so ensembles simulated in
/// chunks keep the per-path random streams of a single large run.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    partition: Partition,
    values: Vec<f64>,
    jumps: Vec<Vec<JumpRecord>>,
    pub seed: u64,
    pub model_tag: String,
    pub first_path: usize,
}

impl PathEnsemble {
    pub fn new(
        partition: Partition,
        values: Vec<f64>,
        jumps: Vec<Vec<JumpRecord>>,
        seed: u64,
        model_tag: impl Into<String>,
        first_path: usize,
    ) -> Result<Self> {
        let n = partition.n_nodes();
        if values.len() != jumps.len() * n {
            return Err(invalid(format!(
                "ensemble has {} values for {} paths of {} nodes",
                values.len(),
                jumps.len(),
                n
            )));
        }
        let e = PathEnsemble { partition, values, jumps, seed, model_tag: model_tag.into(), first_path };
        e.validate()?;
        Ok(e)
    }

    /// Checks the stored invariants: finite node values, jump times inside
    /// (0, t_N] and in order, and nonzero jump sizes.
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite path value {v}")));
        }
        let horizon = self.partition.horizon();
        for (p, js) in self.jumps.iter().enumerate() {
            let mut last = 0.0;
            for j in js {
                if !(j.t > 0.0 && j.t <= horizon && j.t >= last) {
                    return Err(invalid(format!("path {p}: jump time {} out of order or range", j.t)));
                }
                if j.pre == j.post {
                    return Err(invalid(format!("path {p}: zero jump recorded at t={}", j.t)));
                }
                last = j.t;
            }
        }
        Ok(())
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn n_paths(&self) -> usize {
        self.jumps.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.partition.n_nodes()
    }

    pub fn path(&self, i: usize) -> PathView<'_> {
        let n = self.n_nodes();
        PathView {
            times: self.partition.times(),
            values: &self.values[i * n..(i + 1) * n],
            jumps: &self.jumps[i],
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = PathView<'_>> {
        (0..self.n_paths()).map(move |i| self.path(i))
    }

    /// Values of all paths at node `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        let n = self.n_nodes();
        (0..self.n_paths()).map(|i| self.values[i * n + k]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> &[Vec<JumpRecord>] {
        &self.jumps
    }

    pub fn total_jumps(&self) -> usize {
        self.jumps.iter().map(Vec::len).sum()
    }

    /// Ensemble keeping only the nodes with the given indices. Jumps are kept.
    pub fn restrict_nodes(&self, partition: Partition, idx: &[usize]) -> Result<PathEnsemble> {
        let n = self.n_nodes();
        let mut values = Vec::with_capacity(self.n_paths() * idx.len());
        for p in 0..self.n_paths() {
            values.extend(idx.iter().map(|&k| self.values[p * n + k]));
        }
        PathEnsemble::new(partition, values, self.jumps.clone(), self.seed, self.model_tag.clone(), self.first_path)
    }

    /// Concatenate ensembles simulated over consecutive path ranges.
    pub fn concat(parts: Vec<PathEnsemble>) -> Result<PathEnsemble> {
        let mut it = parts.into_iter();
        let mut acc = it.next().ok_or_else(|| invalid("nothing to concatenate"))?;
        for e in it {
            if e.partition != acc.partition || e.model_tag != acc.model_tag || e.seed != acc.seed {
                return Err(invalid("cannot concatenate ensembles of different runs"));
            }
            if e.first_path != acc.first_path + acc.n_paths() {
                return Err(invalid("ensemble chunks are not consecutive"));
            }
            acc.values.extend(e.values);
            acc.jumps.extend(e.jumps);
        }
        Ok(acc)
    }
}

/// One simulated path.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub times: &'a [f64],
    pub values: &'a [f64],
    pub jumps: &'a [JumpRecord],
}

/// A jump-free piece of a path: the state moves continuously from `x_left`
/// at `t0` to `x_right` at `t1−`. `x_left` is post-jump when a jump
/// happened at `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub x_left: f64,
    pub x_right: f64,
    /// Partition step containing the segment.
    pub step: usize,
}

impl Segment {
    pub fn dt(&self) -> f64 {
        self.t1 - self.t0
    }
}

impl<'a> PathView<'a> {
    pub fn x0(&self) -> f64 {
        self.values[0]
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    /// Jump-free segments in time order. Each partition step is split at the
    /// recorded jump times inside it.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.times.len() + self.jumps.len());
        let mut j = 0;
        for k in 0..self.times.len() - 1 {
            let (t1, x1) = (self.times[k + 1], self.values[k + 1]);
            let mut t0 = self.times[k];
            let mut x0 = self.values[k];
            while j < self.jumps.len() && self.jumps[j].t <= t1 {
                let jr = self.jumps[j];
                out.push(Segment { t0, t1: jr.t, x_left: x0, x_right: jr.pre, step: k });
                t0 = jr.t;
                x0 = jr.post;
                j += 1;
            }
            out.push(Segment { t0, t1, x_left: x0, x_right: x1, step: k });
        }
        out
    }

    /// X minus the cumulative sum of recorded jumps, at each node.
    pub fn continuous_part(&self) -> Vec<f64> {
        let mut cum = 0.0;
        let mut j = 0;
        self.times
            .iter()
            .zip(self.values)
            .map(|(&t, &x)| {
                while j < self.jumps.len() && self.jumps[j].t <= t {
                    cum += self.jumps[j].size();
                    j += 1;
                }
                x - cum
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> PathEnsemble {
        let p = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
        let jumps = vec![vec![JumpRecord { t: 0.7, pre: 0.2, post: 1.2 }]];
        PathEnsemble::new(p, vec![0.0, 0.1, 1.3], jumps, 1, "toy", 0).unwrap()
    }

    #[test]
    fn segments_split_at_jumps() {
        let e = toy();
        let segs = e.path(0).segments();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[1], Segment { t0: 0.5, t1: 0.7, x_left: 0.1, x_right: 0.2, step: 1 });
        assert_eq!(segs[2], Segment { t0: 0.7, t1: 1.0, x_left: 1.2, x_right: 1.3, step: 1 });
    }

    #[test]
    fn continuous_part_removes_jumps() {
        let e = toy();
        assert_eq!(e.path(0).continuous_part(), vec![0.0, 0.1, 1.3 - 1.0]);
    }

    #[test]
    fn rejects_zero_jump_and_bad_time() {
        let p = Partition::new(vec![0.0, 1.0]).unwrap();
        let bad = vec![vec![JumpRecord { t: 0.5, pre: 1.0, post: 1.0 }]];
        assert!(PathEnsemble::new(p.clone(), vec![0.0, 1.0], bad, 0, "x", 0).is_err());
        let late = vec![vec![JumpRecord { t: 1.5, pre: 0.0, post: 1.0 }]];
        assert!(PathEnsemble::new(p, vec![0.0, 1.0], late, 0, "x", 0).is_err());
    }
}
