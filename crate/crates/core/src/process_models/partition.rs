use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A finite time partition 0 = t₀ < t₁ < … < t_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Partition {
    times: Vec<f64>,
    mesh: f64,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(invalid("a partition needs at least two times"));
        }
        if times[0] != 0.0 {
            return Err(invalid(format!("partition must start at 0, got {}", times[0])));
        }
        let mut mesh = 0.0f64;
        for w in times.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(invalid(format!("partition not strictly increasing at {} → {}", w[0], w[1])));
            }
            mesh = mesh.max(w[1] - w[0]);
        }
        Ok(Partition { times, mesh })
    }

    /// `steps` equal steps on [0, horizon].
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) {
            return Err(invalid("uniform partition needs steps ≥ 1 and a positive horizon"));
        }
        let h = horizon / steps as f64;
        let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
        times[steps] = horizon;
        Partition::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// |P| = max step.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn n_nodes(&self) -> usize {
        self.times.len()
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// Keep every `factor`-th node (and always the last).
    pub fn coarsen(&self, factor: usize) -> Result<(Partition, Vec<usize>)> {
        if factor == 0 {
            return Err(invalid("coarsening factor must be ≥ 1"));
        }
        let last = self.n_nodes() - 1;
        let mut idx: Vec<usize> = (0..=last).step_by(factor).collect();
        if *idx.last().unwrap() != last {
            idx.push(last);
        }
        let times = idx.iter().map(|&i| self.times[i]).collect();
        Ok((Partition::new(times)?, idx))
    }

    /// Index of the node nearest to `t`.
    pub fn nearest_node(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            return 0;
        }
        if i >= self.times.len() {
            return self.times.len() - 1;
        }
        if (self.times[i] - t) < (t - self.times[i - 1]) {
            i
        } else {
            i - 1
        }
    }
}

impl TryFrom<Vec<f64>> for Partition {
    type Error = crate::error::Error;
    fn try_from(times: Vec<f64>) -> Result<Self> {
        Partition::new(times)
    }
}

impl From<Partition> for Vec<f64> {
    fn from(p: Partition) -> Self {
        p.times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_is_recomputed_max_step() {
        let p = Partition::new(vec![0.0, 0.1, 0.4, 0.5]).unwrap();
        assert!((p.mesh() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_partitions() {
        assert!(Partition::new(vec![0.1, 0.2]).is_err());
        assert!(Partition::new(vec![0.0, 0.2, 0.2]).is_err());
        assert!(Partition::new(vec![0.0]).is_err());
        assert!(Partition::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn coarsen_keeps_endpoints() {
        let p = Partition::uniform(1.0, 10).unwrap();
        let (c, idx) = p.coarsen(4).unwrap();
        assert_eq!(idx, vec![0, 4, 8, 10]);
        assert_eq!(c.horizon(), 1.0);
    }

    #[test]
    fn nearest_node_snaps() {
        let p = Partition::uniform(1.0, 4).unwrap();
        assert_eq!(p.nearest_node(0.3), 1);
        assert_eq!(p.nearest_node(0.4), 2);
        assert_eq!(p.nearest_node(9.0), 4);
    }
}
