use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{JumpRecord, ModelSpec, Partition, PathEnsemble};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;

/// Simulate `n_paths` paths with Euler–Maruyama between jumps and jumps by
/// thinning against the model's intensity bound.
///
/// Path `i` draws from ChaCha8 stream `i` of `seed`, so results do not depend
/// on the execution strategy or on how the path range is chunked.
pub fn simulate(model: &ModelSpec, partition: &Partition, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    simulate_range(model, partition, 0..n_paths, seed, Exec::default())
}

/// Simulate the paths with global indices in `paths`.
pub fn simulate_range(
    model: &ModelSpec,
    partition: &Partition,
    paths: Range<usize>,
    seed: u64,
    exec: Exec,
) -> Result<PathEnsemble> {
    model.validate()?;
    if paths.is_empty() {
        return Err(invalid("n_paths must be ≥ 1"));
    }
    if partition.horizon() > model.horizon * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "partition ends at {} beyond model horizon {}",
            partition.horizon(),
            model.horizon
        )));
    }
    let first = paths.start;
    let simulated = exec.map(paths.len(), |i| simulate_path(model, partition, seed, (first + i) as u64));
    let n = partition.n_nodes();
    let mut values = Vec::with_capacity(paths.len() * n);
    let mut jumps = Vec::with_capacity(paths.len());
    for r in simulated {
        let (v, j) = r?;
        values.extend(v);
        jumps.push(j);
    }
    PathEnsemble::new(partition.clone(), values, jumps, seed, model.tag.clone(), first)
}

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_state(model: &ModelSpec, t: f64, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite { what: "state", t, x });
    }
    if x.abs() > model.explosion_bound {
        return Err(Error::Explosion { t, x, bound: model.explosion_bound });
    }
    Ok(())
}

/// One Euler–Maruyama step of the continuous part over `dt` from (t, x).
fn euler_step<R: Rng>(model: &ModelSpec, t: f64, x: f64, dt: f64, rng: &mut R) -> Result<f64> {
    let b = model.drift(t, x) - model.compensator(t, x);
    let s = model.vol(t, x);
    if !b.is_finite() {
        return Err(Error::NonFinite { what: "drift", t, x });
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::NonFinite { what: "volatility", t, x });
    }
    let z: f64 = StandardNormal.sample(rng);
    let next = x + b * dt + s * dt.sqrt() * z;
    check_state(model, t + dt, next)?;
    Ok(next)
}

fn simulate_path(
    model: &ModelSpec,
    partition: &Partition,
    seed: u64,
    stream: u64,
) -> Result<(Vec<f64>, Vec<JumpRecord>)> {
    let mut rng = path_rng(seed, stream);
    let times = partition.times();
    let mut values = Vec::with_capacity(times.len());
    let mut jumps = Vec::new();
    let mut x = model.initial.sample(&mut rng);
    check_state(model, 0.0, x)?;
    values.push(x);
    let bound = model.intensity_bound;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let (mut t, mut state) = (t0, x);
        if let Some(size_law) = model.jump_size {
            // Candidate times from a rate-`bound` Poisson clock; the first
            // accepted candidate becomes the step's jump.
            let mut s = t0;
            loop {
                let u: f64 = rng.random();
                s += -(1.0 - u).ln() / bound;
                if s >= t1 {
                    break;
                }
                let pre = euler_step(model, t, state, s - t, &mut rng)?;
                let rate = model.intensity(s, pre);
                if !rate.is_finite() || rate < 0.0 {
                    return Err(Error::NonFinite { what: "jump intensity", t: s, x: pre });
                }
                if rate > bound {
                    return Err(Error::IntensityBound { t: s, x: pre, rate, bound });
                }
                t = s;
                state = pre;
                if rng.random::<f64>() * bound < rate {
                    let z = size_law.sample(&mut rng);
                    let post = pre + z;
                    check_state(model, s, post)?;
                    if post != pre {
                        jumps.push(JumpRecord { t: s, pre, post });
                    }
                    state = post;
                    break;
                }
            }
        }
        x = euler_step(model, t, state, t1 - t, &mut rng)?;
        values.push(x);
    }
    Ok((values, jumps))
}

/// Per-path drift process A_t = ∫₀ᵗ b(s, X_s) ds at the partition nodes,
/// integrated with the same left-point rule as the simulation scheme.
pub fn drift_path(model: &ModelSpec, ensemble: &PathEnsemble) -> Result<Vec<Vec<f64>>> {
    if ensemble.model_tag != model.tag {
        return Err(Error::ModelMismatch { ensemble: ensemble.model_tag.clone(), model: model.tag.clone() });
    }
    Ok(ensemble
        .paths()
        .map(|path| {
            let mut a = vec![0.0; path.values.len()];
            let mut acc = 0.0;
            for seg in path.segments() {
                acc += model.drift(seg.t0, seg.x_left) * seg.dt();
                a[seg.step + 1] = acc;
            }
            a
        })
        .collect())
}
