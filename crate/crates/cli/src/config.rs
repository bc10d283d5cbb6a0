//! Run configuration: a JSON document merged with command-line flags,
//! validated field by field and hashed for artifact provenance.

use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use driftlab_core::marginals::CallOracle;
use driftlab_core::process_models::ModelSpec;
use driftlab_core::verifier::{compound_poisson_bm, Suite};

pub const CONFIG_SCHEMA: &str = "driftlab.config/1";

/// Environment variable overriding the default output root.
pub const OUTPUT_ROOT_ENV: &str = "DRIFTLAB_OUTPUT_ROOT";

/// Model tags accepted by `model`.
pub const MODELS: [&str; 7] = ["bm", "drifted_bm", "ou", "jump_diffusion", "bm_compound_poisson", "pure_drift", "local_vol"];

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// b for `drifted_bm` and `pure_drift`.
    pub drift: f64,
    /// Mean reversion for `ou`.
    pub kappa: f64,
    /// Poisson rate for the jump models.
    pub jump_rate: f64,
    /// Fixed jump size for the jump models.
    pub jump_size: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { drift: 1.0, kappa: 1.0, jump_rate: 1.0, jump_size: 0.5 }
    }
}

/// Evenly spaced nodes `min, …, max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl NodeSpec {
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n).map(|i| self.min + (self.max - self.min) * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceMethod {
    /// Monte-Carlo estimate from simulated paths.
    Mc,
    /// Forward PDE (martingale diffusions only).
    Pde,
    /// Closed form (models with a known marginal law).
    Closed,
}

/// f(x) = height·(1 − ((x − center)/radius)²)³ on |x − center| < radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: f64,
    pub radius: f64,
    pub height: f64,
}

/// Plateau test function on [t_a, t_b] × [x_a, x_b].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub t_a: f64,
    pub t_b: f64,
    pub x_a: f64,
    pub x_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub model_params: ModelParams,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub paths: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub chunk: Option<usize>,
    #[serde(default)]
    pub strikes: Option<NodeSpec>,
    /// Number of equal surface time intervals on [0, horizon].
    #[serde(default)]
    pub surface_times: Option<usize>,
    #[serde(default)]
    pub surface_method: Option<SurfaceMethod>,
    #[serde(default)]
    pub f: Option<BumpSpec>,
    #[serde(default)]
    pub theta: Option<BoxSpec>,
    /// Suite id or `all`.
    #[serde(default)]
    pub suite: Option<String>,
    /// Where artifacts go; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Ensemble file to read instead of simulating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: default_schema(),
            model: None,
            model_params: ModelParams::default(),
            horizon: None,
            steps: None,
            paths: None,
            seed: None,
            chunk: None,
            strikes: None,
            surface_times: None,
            surface_method: None,
            f: None,
            theta: None,
            suite: None,
            output: None,
            input: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text)?;
        if c.schema != CONFIG_SCHEMA {
            bail!("schema: expected `{CONFIG_SCHEMA}`, got `{}`", c.schema);
        }
        Ok(c)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(1.0)
    }

    pub fn steps(&self) -> usize {
        self.steps.unwrap_or(100)
    }

    pub fn paths(&self) -> usize {
        self.paths.unwrap_or(10_000)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn chunk(&self) -> usize {
        self.chunk.unwrap_or(10_000)
    }

    pub fn strikes(&self) -> NodeSpec {
        self.strikes.unwrap_or(NodeSpec { min: -4.0, max: 4.0, count: 81 })
    }

    pub fn surface_times(&self) -> usize {
        self.surface_times.unwrap_or(10)
    }

    pub fn f(&self) -> BumpSpec {
        self.f.unwrap_or(BumpSpec { center: 0.5, radius: 1.5, height: 1.0 })
    }

    pub fn theta(&self) -> BoxSpec {
        self.theta.unwrap_or(BoxSpec { t_a: 0.2, t_b: 0.8, x_a: -1.0, x_b: 2.0 })
    }

    /// Field-level problems, empty when the config is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bad = |field: &str, msg: String| out.push(format!("{field}: {msg}"));
        if let Some(m) = &self.model {
            if !MODELS.contains(&m.as_str()) {
                bad("model", format!("unknown model `{m}`; expected one of {}", MODELS.join(", ")));
            }
        }
        let p = &self.model_params;
        for (name, v) in [("drift", p.drift), ("kappa", p.kappa), ("jump_rate", p.jump_rate), ("jump_size", p.jump_size)] {
            if !v.is_finite() {
                bad(&format!("model_params.{name}"), format!("must be finite (got {v})"));
            }
        }
        if p.jump_rate < 0.0 {
            bad("model_params.jump_rate", format!("must be ≥ 0 (got {})", p.jump_rate));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                bad("horizon", format!("must be positive and finite (got {h})"));
            }
        }
        for (name, v) in [("steps", self.steps), ("paths", self.paths), ("chunk", self.chunk), ("surface_times", self.surface_times)] {
            if v == Some(0) {
                bad(name, "must be at least 1 (got 0)".into());
            }
        }
        if let Some(s) = self.strikes {
            if s.count < 2 || !(s.min < s.max) || !s.min.is_finite() || !s.max.is_finite() {
                bad("strikes", format!("need count ≥ 2 and finite min < max (got {s:?})"));
            }
        }
        if let Some(f) = self.f {
            if !(f.radius > 0.0) || !f.center.is_finite() || !f.height.is_finite() || !f.radius.is_finite() {
                bad("f", format!("need a finite center and height and a positive radius (got {f:?})"));
            }
        }
        if let Some(b) = self.theta {
            if !(b.t_a > 0.0 && b.t_a < b.t_b && b.t_b <= self.horizon()) {
                bad("theta", format!("need 0 < t_a < t_b ≤ horizon (got t_a = {}, t_b = {})", b.t_a, b.t_b));
            }
            if !(b.x_a < b.x_b) || !b.x_a.is_finite() || !b.x_b.is_finite() {
                bad("theta", format!("need finite x_a < x_b (got x_a = {}, x_b = {})", b.x_a, b.x_b));
            }
        }
        if let Some(s) = &self.suite {
            if s != "all" && s.parse::<Suite>().is_err() {
                let ids: Vec<&str> = Suite::ALL.iter().map(|x| x.id()).collect();
                bad("suite", format!("unknown suite `{s}`; expected `all` or one of {}", ids.join(", ")));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            return Ok(());
        }
        bail!("invalid configuration:\n  {}", problems.join("\n  "))
    }

    pub fn require_model(&self) -> Result<&str> {
        match &self.model {
            Some(m) => Ok(m),
            None => bail!("invalid configuration:\n  model: required for this command"),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let p = &self.model_params;
        let t = self.horizon();
        Ok(match self.require_model()? {
            "bm" => ModelSpec::brownian(t),
            "drifted_bm" => ModelSpec::drifted_brownian(p.drift, t),
            "ou" => ModelSpec::ornstein_uhlenbeck(p.kappa, t),
            "jump_diffusion" => ModelSpec::jump_diffusion(p.jump_rate, p.jump_size, t),
            "bm_compound_poisson" => compound_poisson_bm(p.jump_rate, p.jump_size, t),
            "pure_drift" => ModelSpec::pure_drift(p.drift, t),
            "local_vol" => ModelSpec::tanh_local_vol(t),
            other => bail!("model: unknown model `{other}`"),
        })
    }

    /// Closed-form marginal law, when the model has one.
    pub fn oracle(&self) -> Option<CallOracle> {
        let p = &self.model_params;
        match self.model.as_deref()? {
            "bm" => Some(CallOracle::brownian()),
            "drifted_bm" => Some(CallOracle::Gaussian { x0: 0.0, drift: p.drift, sigma: 1.0 }),
            "jump_diffusion" => Some(CallOracle::PoissonGaussian {
                x0: 0.0,
                drift: 0.0,
                sigma: 1.0,
                rate: p.jump_rate,
                size: p.jump_size,
            }),
            "bm_compound_poisson" => Some(CallOracle::PoissonGaussian {
                x0: 0.0,
                drift: p.jump_rate * p.jump_size,
                sigma: 1.0,
                rate: p.jump_rate,
                size: p.jump_size,
            }),
            _ => None,
        }
    }

    /// The config as it enters the hash: output location removed.
    pub fn hashed_view(&self) -> RunConfig {
        RunConfig { output: None, input: None, ..self.clone() }
    }
}
