//! Measure-valued functionals: the bilinear form μ_[f,g], the drift measure
//! μ_X, the jump functional J^X and the generalised drift μ̃_f^X, plus an
//! explicit local signed measure type for densities and time atoms.
//!
//! Grid inputs are piecewise constant in t, so every Lebesgue–Stieltjes
//! integral in t is a finite sum over t-atoms; x-integrals are evaluated
//! exactly cell by cell on the common refinement of the x-nodes.

mod bilinear;
mod drift;
mod jump;
mod refine;
mod signed;

pub use bilinear::{mu_bilinear, mu_bilinear_terms, BilinearTerms};
pub use drift::{drift_measure_x, inner_antiderivative, mu_tilde, MuTilde};
pub use jump::{jump_term, jump_term_bound};
pub use signed::LocalSignedMeasure;
