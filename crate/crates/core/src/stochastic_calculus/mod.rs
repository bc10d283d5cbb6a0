//! Pathwise estimators: quadratic (co)variation along partitions, the drift
//! decomposition of f(t, X_t) for C² functions, the quadratic-variation
//! identity for Lipschitz f, and binned conditional variations.

mod dirichlet;
mod ito;
mod qv;
mod variation;

pub use dirichlet::{dirichlet_qv_check, dirichlet_qv_samples, DirichletReport, DirichletRow, DirichletSamples};
pub use ito::{ito_drift, ito_drift_functional, ito_drift_samples, jump_remainder, DriftDecomposition};
pub use qv::{node_indices, qv_partition, QvPath, SampledPath};
pub(crate) use ito::weighted_drift_rows;
pub use variation::{conditional_variation, reversed_conditional_variation, Binning, CondVariation};
