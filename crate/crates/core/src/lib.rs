//! Numerical laboratory for drift identities of one-dimensional diffusions
//! and jump-diffusions.
//!
//! The crate simulates generator-driven processes, represents Lipschitz /
//! càdlàg test functions on grids, builds call surfaces from marginal laws,
//! and evaluates the bilinear Lebesgue–Stieltjes functional μ_[f,g], drift
//! measures and jump functionals that together describe the drift of
//! f(t, X_t). The [`verifier`] module turns the resulting identities into
//! pass/fail experiments.
//!
//! Per-path work runs on rayon when the `parallel` feature is enabled (the
//! default); every reduction is performed in path order so results are
//! bit-identical with and without it.

pub mod error;
pub mod exec;
pub mod function_space;
pub mod marginals;
pub mod measures;
pub mod numerics;
pub mod process_models;
pub mod smooth;
pub mod stochastic_calculus;
pub mod verifier;

pub use error::{Error, Result};
pub use exec::{Exec, McEstimate};
