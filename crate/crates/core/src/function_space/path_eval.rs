use serde::{Deserialize, Serialize};

use super::GridFunction;
use crate::process_models::PathView;

/// A time at which Y = f(·, X) may jump: an X-jump, a t-node of f, or both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    pub t: f64,
    pub x_pre: f64,
    pub x_post: f64,
    /// f⁻(t, X_{t−}).
    pub y_pre: f64,
    /// f(t, X_t).
    pub y_post: f64,
    /// f(t, X_t) − f(t, X_{t−}).
    pub x_part: f64,
    /// Δ_t f(t, X_{t−}) = f(t, X_{t−}) − f⁻(t, X_{t−}).
    pub t_part: f64,
    /// False when a t-node of f falls strictly between partition nodes and
    /// the state there was taken from the previous node.
    pub exact_state: bool,
}

/// Y_t = f(t, X_t) at the partition nodes plus its jump decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathValues {
    pub node_values: Vec<f64>,
    pub events: Vec<PathEvent>,
}

impl PathValues {
    /// Sum of all jumps of Y.
    pub fn total_jump(&self) -> f64 {
        self.events.iter().map(|e| e.y_post - e.y_pre).sum()
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn eval_on_path(f: &GridFunction, path: &PathView<'_>) -> PathValues {
    let times = path.times;
    let node_values = times.iter().zip(path.values).map(|(&t, &x)| f.value(t, x)).collect();
    let horizon = times[times.len() - 1];

    // State just before / at time s when s is not an X-jump time.
    let state_at = |s: f64| -> (f64, bool) {
        let k = times.partition_point(|&t| t <= s).saturating_sub(1);
        let exact = same_time(times[k], s) || times.get(k + 1).is_some_and(|&t| same_time(t, s));
        let k = if times.get(k + 1).is_some_and(|&t| same_time(t, s)) { k + 1 } else { k };
        let mut x = path.values[k];
        for j in path.jumps {
            if j.t > times[k] && j.t < s {
                x = j.post;
            }
        }
        (x, exact)
    };

    let t_nodes: Vec<f64> = f.t_nodes().iter().skip(1).copied().filter(|&s| s > 0.0 && s <= horizon).collect();
    let mut events = Vec::with_capacity(path.jumps.len() + t_nodes.len());
    let (mut a, mut b) = (0, 0);
    while a < path.jumps.len() || b < t_nodes.len() {
        let jump = path.jumps.get(a);
        let node = t_nodes.get(b).copied();
        let (t, x_pre, x_post, exact) = match (jump, node) {
            (Some(j), Some(s)) if same_time(j.t, s) => {
                a += 1;
                b += 1;
                (j.t, j.pre, j.post, true)
            }
            (Some(j), Some(s)) if j.t < s => {
                a += 1;
                (j.t, j.pre, j.post, true)
            }
            (Some(j), None) => {
                a += 1;
                (j.t, j.pre, j.post, true)
            }
            (_, Some(s)) => {
                b += 1;
                let (x, exact) = state_at(s);
                (s, x, x, exact)
            }
            (None, None) => unreachable!(),
        };
        let y_pre = f.value_left(t, x_pre);
        let mid = f.value(t, x_pre);
        let y_post = f.value(t, x_post);
        events.push(PathEvent {
            t,
            x_pre,
            x_post,
            y_pre,
            y_post,
            x_part: y_post - mid,
            t_part: mid - y_pre,
            exact_state: exact,
        });
    }
    PathValues { node_values, events }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_models::{simulate, ModelSpec, Partition};

    fn grid_x() -> Vec<f64> {
        (0..=40).map(|j| -10.0 + 0.5 * j as f64).collect()
    }

    #[test]
    fn identity_reproduces_the_path() {
        let m = ModelSpec::jump_diffusion(2.0, 0.7, 1.0);
        let e = simulate(&m, &Partition::uniform(1.0, 50).unwrap(), 20, 3).unwrap();
        let f = GridFunction::from_fn(vec![0.0], grid_x(), |_, x| x).unwrap();
        for p in e.paths() {
            let y = eval_on_path(&f, &p);
            for (a, b) in y.node_values.iter().zip(p.values) {
                assert!((a - b).abs() < 1e-12);
            }
            assert_eq!(y.events.len(), p.jumps.len());
            for (ev, j) in y.events.iter().zip(p.jumps) {
                assert!((ev.x_part - j.size()).abs() < 1e-12);
                assert_eq!(ev.t_part, 0.0);
            }
        }
    }

    #[test]
    fn constant_function_has_no_jumps() {
        let m = ModelSpec::jump_diffusion(2.0, 0.7, 1.0);
        let e = simulate(&m, &Partition::uniform(1.0, 50).unwrap(), 5, 4).unwrap();
        let f = GridFunction::from_fn(vec![0.0, 0.3], grid_x(), |_, _| 2.5).unwrap();
        for p in e.paths() {
            let y = eval_on_path(&f, &p);
            assert!(y.node_values.iter().all(|&v| v == 2.5));
            assert!(y.events.iter().all(|ev| ev.x_part == 0.0 && ev.t_part == 0.0));
        }
    }

    #[test]
    fn time_jump_on_continuous_path() {
        let m = ModelSpec::brownian(1.0);
        let e = simulate(&m, &Partition::uniform(1.0, 64).unwrap(), 10, 9).unwrap();
        let s1 = 0.5; // a partition node
        let f = GridFunction::from_fn(vec![0.0, s1], grid_x(), |t, x| if t >= s1 { x * x / 20.0 + 1.0 } else { x }).unwrap();
        for p in e.paths() {
            let y = eval_on_path(&f, &p);
            assert_eq!(y.events.len(), 1);
            let ev = y.events[0];
            let x = p.values[32];
            assert!(ev.exact_state);
            assert_eq!(ev.t_part, f.value(s1, x) - f.value_left(s1, x));
            assert_eq!(ev.x_part, 0.0);
        }
    }
}
