use thiserror::Error;

/// Errors raised by the simulation, surface and functional layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite {what} at t={t}, x={x}")]
    NonFinite { what: &'static str, t: f64, x: f64 },

    #[error("state |X|={x} exceeded explosion bound {bound} at t={t}")]
    Explosion { t: f64, x: f64, bound: f64 },

    #[error("jump intensity {rate} exceeds thinning bound {bound} at t={t}, x={x}")]
    IntensityBound { t: f64, x: f64, rate: f64, bound: f64 },

    #[error("ensemble was generated by model `{ensemble}`, not `{model}`")]
    ModelMismatch { ensemble: String, model: String },

    #[error("quadrature did not converge: residual estimate {residual:e} after {evaluations} evaluations")]
    Quadrature { residual: f64, evaluations: usize },

    #[error("support of θ starts at t={t_start}; time mollification needs n ≥ {min_n}")]
    MollifierSupport { t_start: f64, min_n: usize },

    #[error("finite-difference scheme failed: {reason}; try {hint}")]
    Scheme { reason: String, hint: String },

    #[error("property violated: {0}")]
    Property(String),

    #[error("marginal mismatch between schemes: {0}")]
    MarginalMismatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
