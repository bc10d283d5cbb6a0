//! Experiments that turn the drift identities into pass/fail checks.

mod backward;
mod gaussian;
mod identities;
mod martingale;
mod plots;
mod report;
mod suite;
mod uniqueness;
mod variation;

pub use backward::{backward_residual, gaussian_call_price, residual_refinement, Differencing, Refinement, ResidualGrid};
pub use identities::compound_poisson_bm;
pub use martingale::{martingale_condition_values, theta_basis, theta_l1, BasisTolerance, BasisValue};
pub use plots::render_svg;
pub use report::{config_hash, Check, Comparison, ExperimentReport, Figure, Series, Verdict, REPORT_SCHEMA};
pub use suite::{run_suite, Suite, SuiteParams};
