//! Grid representation of Lipschitz-in-x, càdlàg-in-t functions.
//!
//! A [`GridFunction`] is piecewise linear in x between its x-nodes (flat
//! beyond them) and right-continuous piecewise constant in t on
//! [s_i, s_{i+1}). Every instance is therefore Lipschitz in x with one-sided
//! x-derivatives everywhere, and its time variation is a finite sum of atoms
//! at the t-nodes, so Lebesgue–Stieltjes integrals against d_t f are finite
//! sums.

mod compact;
mod grid;
pub mod io;
mod kernel;
mod mollify;
mod path_eval;

pub use compact::{CompactGridFunction, SupportBox};
pub use grid::{GridFunction, Side};
pub use kernel::BumpKernel;
pub use mollify::{mollify_space, mollify_time, SpaceMollified, TimeMollified};
pub use path_eval::{eval_on_path, PathEvent, PathValues};

/// Anything evaluable at (t, x); used for test functions θ in drift
/// measures.
pub trait SpaceTimeFn: Sync {
    fn eval(&self, t: f64, x: f64) -> f64;

    /// θ⁻(t, x) = lim_{s↑t} θ(s, x); equal to `eval` for functions continuous
    /// in t.
    fn eval_left(&self, t: f64, x: f64) -> f64 {
        self.eval(t, x)
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> SpaceTimeFn for F {
    fn eval(&self, t: f64, x: f64) -> f64 {
        self(t, x)
    }
}

impl SpaceTimeFn for GridFunction {
    fn eval(&self, t: f64, x: f64) -> f64 {
        self.value(t, x)
    }

    fn eval_left(&self, t: f64, x: f64) -> f64 {
        self.value_left(t, x)
    }
}

impl SpaceTimeFn for CompactGridFunction {
    fn eval(&self, t: f64, x: f64) -> f64 {
        self.grid().value(t, x)
    }

    fn eval_left(&self, t: f64, x: f64) -> f64 {
        self.grid().value_left(t, x)
    }
}
