use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::process_models::{simulate_range, ModelSpec, Partition, PathEnsemble};

use super::report::ExperimentReport;

/// The acceptance experiments, in criterion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    GaussianOracle,
    BackwardResidual,
    MartingaleCondition,
    DriftIdentity,
    Occupation,
    DirichletQv,
    Symmetry,
    ConditionalVariation,
    Uniqueness,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::GaussianOracle,
        Suite::BackwardResidual,
        Suite::MartingaleCondition,
        Suite::DriftIdentity,
        Suite::Occupation,
        Suite::DirichletQv,
        Suite::Symmetry,
        Suite::ConditionalVariation,
        Suite::Uniqueness,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Suite::GaussianOracle => "gaussian_oracle",
            Suite::BackwardResidual => "backward_residual",
            Suite::MartingaleCondition => "martingale_condition",
            Suite::DriftIdentity => "drift_identity",
            Suite::Occupation => "occupation",
            Suite::DirichletQv => "dirichlet_qv",
            Suite::Symmetry => "symmetry",
            Suite::ConditionalVariation => "conditional_variation",
            Suite::Uniqueness => "uniqueness",
        }
    }

    /// Reference parameters: the scale at which the acceptance thresholds
    /// are stated.
    pub fn default_params(self) -> SuiteParams {
        let p = |n_paths, steps| SuiteParams { n_paths, steps, seed: 20_240_601, chunk: 10_000, models: None };
        match self {
            Suite::GaussianOracle => p(100_000, 100),
            Suite::BackwardResidual | Suite::MartingaleCondition => p(0, 0),
            Suite::DriftIdentity => p(100_000, 400),
            Suite::Occupation => p(100_000, 500),
            Suite::DirichletQv => SuiteParams { chunk: 250, ..p(2_000, 10_000) },
            Suite::Symmetry => p(50_000, 2_000),
            Suite::ConditionalVariation => p(100_000, 200),
            Suite::Uniqueness => p(20_000, 100),
        }
    }

    /// Whether the suite draws random paths (and so depends on
    /// `n_paths`/`seed`).
    pub fn is_stochastic(self) -> bool {
        !matches!(self, Suite::BackwardResidual | Suite::MartingaleCondition)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| {
                let ids: Vec<&str> = Suite::ALL.iter().map(|x| x.id()).collect();
                invalid(format!("unknown suite `{s}`; expected one of {}", ids.join(", ")))
            })
    }
}

/// Scale and randomness of a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub n_paths: usize,
    /// Time steps of the simulation partition on [0, 1].
    pub steps: usize,
    pub seed: u64,
    /// Paths simulated per batch; bounds memory, not results.
    pub chunk: usize,
    /// Restrict multi-model suites to these model tags.
    pub models: Option<Vec<String>>,
}

impl SuiteParams {
    pub fn validate(&self, suite: Suite) -> Result<()> {
        if suite.is_stochastic() {
            if self.n_paths < 2 {
                return Err(invalid(format!("n_paths = {} but the {suite} suite needs at least 2", self.n_paths)));
            }
            if self.steps == 0 {
                return Err(invalid("steps must be ≥ 1"));
            }
            if self.chunk == 0 {
                return Err(invalid("chunk must be ≥ 1"));
            }
        }
        Ok(())
    }

    pub(crate) fn wants(&self, tag: &str) -> bool {
        self.models.as_ref().is_none_or(|m| m.iter().any(|t| t == tag))
    }
}

#[derive(Serialize)]
struct Stamp<'a> {
    suite: &'a str,
    params: &'a SuiteParams,
}

pub(crate) fn new_report(suite: Suite, params: &SuiteParams) -> Result<ExperimentReport> {
    ExperimentReport::new(suite.id(), &Stamp { suite: suite.id(), params })
}

/// Simulate `n_paths` paths in batches of `chunk` and concatenate the
/// per-path outputs of `per_batch` in path order.
pub(crate) fn batched<T: Send>(
    model: &ModelSpec,
    partition: &Partition,
    params: &SuiteParams,
    exec: Exec,
    mut per_batch: impl FnMut(&PathEnsemble) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(params.n_paths);
    let mut start = 0;
    while start < params.n_paths {
        let end = (start + params.chunk).min(params.n_paths);
        let e = simulate_range(model, partition, start..end, params.seed, exec)?;
        out.extend(per_batch(&e)?);
        start = end;
    }
    Ok(out)
}

/// Run one suite.
pub fn run_suite(suite: Suite, params: &SuiteParams, exec: Exec) -> Result<ExperimentReport> {
    params.validate(suite)?;
    match suite {
        Suite::GaussianOracle => super::gaussian::gaussian_oracle_suite(params, exec),
        Suite::BackwardResidual => super::gaussian::backward_residual_suite(params),
        Suite::MartingaleCondition => super::gaussian::martingale_condition_suite(params),
        Suite::DriftIdentity => super::identities::drift_identity_suite(params, exec),
        Suite::Occupation => super::identities::occupation_suite(params, exec),
        Suite::DirichletQv => super::variation::dirichlet_suite(params, exec),
        Suite::Symmetry => super::identities::symmetry_suite(params, exec),
        Suite::ConditionalVariation => super::variation::conditional_variation_suite(params, exec),
        Suite::Uniqueness => super::uniqueness::uniqueness_suite(params, exec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_ids_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.id().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.id()));
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn zero_paths_is_rejected() {
        let p = SuiteParams { n_paths: 0, ..Suite::Occupation.default_params() };
        assert!(p.validate(Suite::Occupation).is_err());
        assert!(p.validate(Suite::BackwardResidual).is_ok());
    }
}
