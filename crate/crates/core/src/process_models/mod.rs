//! Generator-driven one-dimensional processes: model descriptions, time
//! partitions, simulated path ensembles and the exact drift of each model.

mod ensemble;
mod generator;
pub mod io;
mod model;
mod partition;
mod simulate;

pub use ensemble::{JumpRecord, PathEnsemble, PathView, Segment};
pub use generator::{generator_apply, GeneratorValue, QuadratureBudget};
pub use model::{CoefFn, InitialLaw, JumpSize, ModelSpec};
pub use partition::Partition;
pub use simulate::{drift_path, simulate, simulate_range};
