//! Call surfaces C(t,x) = E[(X_t − x)_+], their densities and Dupire
//! coefficients, and conditional-expectation surfaces solved backward from
//! a terminal payoff.

mod dupire;
mod oracle;
mod pde;
mod projection;
mod surface;

pub use dupire::{density, dupire_sigma, DensitySlice, SigmaRecovery, CURVATURE_FLOOR};
pub use oracle::CallOracle;
pub use pde::{call_surface_forward_pde, conditional_expectation_surface, ConditionalSurface, PdeGrid};
pub use projection::{convex_projection, isotonic_regression};
pub use surface::{estimate_call_surface, CallSurface};
