use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Coefficient function of (t, x).
pub type CoefFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Law of the jump size Z = X_t − X_{t−}. The post-jump level is x + Z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSize {
    Fixed { size: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl JumpSize {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpSize::Fixed { size } => size,
            JumpSize::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            JumpSize::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpSize::Fixed { size } => size,
            JumpSize::Normal { mean, .. } => mean,
            JumpSize::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpSize::Fixed { size } => size.is_finite() && size != 0.0,
            JumpSize::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            JumpSize::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("degenerate jump size law {self:?}")))
        }
    }
}

/// Law of X₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialLaw {
    Point { x0: f64 },
    Normal { mean: f64, sd: f64 },
}

impl InitialLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialLaw::Point { x0 } => x0,
            InitialLaw::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::Point { x0 } => x0,
            InitialLaw::Normal { mean, .. } => mean,
        }
    }
}

/// A generator model
///
/// L_t f(x) = ½σ²(t,x) f''(x) + b(t,x) f'(x) + ∫ (f(y) − f(x) − (y − x) f'(x)) j(t,x,y) dy
///
/// with j(t,x,y) = λ(t,x)·ν(y − x) for a jump-size law ν. Because the jump
/// integral is compensated, L_t applied to the identity returns b: the
/// simulated continuous drift between jumps is b − λ·E[Z].
#[derive(Clone)]
pub struct ModelSpec {
    pub tag: String,
    drift: CoefFn,
    vol: CoefFn,
    intensity: CoefFn,
    pub jump_size: Option<JumpSize>,
    pub initial: InitialLaw,
    pub horizon: f64,
    /// Upper bound on λ(t, x) used for thinning.
    pub intensity_bound: f64,
    /// Abort when |X| exceeds this level.
    pub explosion_bound: f64,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("tag", &self.tag)
            .field("jump_size", &self.jump_size)
            .field("initial", &self.initial)
            .field("horizon", &self.horizon)
            .field("intensity_bound", &self.intensity_bound)
            .finish_non_exhaustive()
    }
}

fn constant(c: f64) -> CoefFn {
    Arc::new(move |_, _| c)
}

impl ModelSpec {
    /// Zero drift, zero volatility, no jumps, X₀ = 0.
    pub fn new(tag: impl Into<String>, horizon: f64) -> Self {
        ModelSpec {
            tag: tag.into(),
            drift: constant(0.0),
            vol: constant(0.0),
            intensity: constant(0.0),
            jump_size: None,
            initial: InitialLaw::Point { x0: 0.0 },
            horizon,
            intensity_bound: 0.0,
            explosion_bound: 1e6,
        }
    }

    pub fn with_drift(mut self, b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.drift = Arc::new(b);
        self
    }

    pub fn with_vol(mut self, sigma: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.vol = Arc::new(sigma);
        self
    }

    pub fn with_constant_drift(self, b: f64) -> Self {
        self.with_drift(move |_, _| b)
    }

    pub fn with_constant_vol(self, sigma: f64) -> Self {
        self.with_vol(move |_, _| sigma)
    }

    pub fn with_jumps(
        mut self,
        intensity: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        intensity_bound: f64,
        size: JumpSize,
    ) -> Self {
        self.intensity = Arc::new(intensity);
        self.intensity_bound = intensity_bound;
        self.jump_size = Some(size);
        self
    }

    pub fn with_poisson_jumps(self, rate: f64, size: JumpSize) -> Self {
        self.with_jumps(move |_, _| rate, rate, size)
    }

    pub fn with_initial(mut self, initial: InitialLaw) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_explosion_bound(mut self, bound: f64) -> Self {
        self.explosion_bound = bound;
        self
    }

    /// Standard Brownian motion from 0.
    pub fn brownian(horizon: f64) -> Self {
        ModelSpec::new("bm", horizon).with_constant_vol(1.0)
    }

    /// Brownian motion with constant drift `b`.
    pub fn drifted_brownian(b: f64, horizon: f64) -> Self {
        ModelSpec::new("drifted_bm", horizon)
            .with_constant_vol(1.0)
            .with_constant_drift(b)
    }

    /// dX = −κX dt + dW.
    pub fn ornstein_uhlenbeck(kappa: f64, horizon: f64) -> Self {
        ModelSpec::new("ou", horizon)
            .with_constant_vol(1.0)
            .with_drift(move |_, x| -kappa * x)
    }

    /// Brownian motion plus compensated compound-Poisson jumps of fixed size.
    pub fn jump_diffusion(rate: f64, size: f64, horizon: f64) -> Self {
        ModelSpec::new("jump_diffusion", horizon)
            .with_constant_vol(1.0)
            .with_poisson_jumps(rate, JumpSize::Fixed { size })
    }

    /// dX = b dt.
    pub fn pure_drift(b: f64, horizon: f64) -> Self {
        ModelSpec::new("pure_drift", horizon).with_constant_drift(b)
    }

    /// Martingale local-volatility diffusion dX = (0.2 + 0.1·tanh X) dW.
    pub fn tanh_local_vol(horizon: f64) -> Self {
        ModelSpec::new("local_vol", horizon).with_vol(|_, x| 0.2 + 0.1 * x.tanh())
    }

    pub fn drift(&self, t: f64, x: f64) -> f64 {
        (self.drift)(t, x)
    }

    pub fn vol(&self, t: f64, x: f64) -> f64 {
        (self.vol)(t, x)
    }

    pub fn intensity(&self, t: f64, x: f64) -> f64 {
        if self.jump_size.is_some() {
            (self.intensity)(t, x)
        } else {
            0.0
        }
    }

    pub fn has_jumps(&self) -> bool {
        self.jump_size.is_some()
    }

    /// λ(t,x)·E[Z], the drift removed between jumps.
    pub fn compensator(&self, t: f64, x: f64) -> f64 {
        match self.jump_size {
            Some(size) => self.intensity(t, x) * size.mean(),
            None => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if let Some(size) = self.jump_size {
            size.validate()?;
            if !(self.intensity_bound.is_finite() && self.intensity_bound > 0.0) {
                return Err(invalid("jump models need a positive finite intensity bound"));
            }
        }
        if !(self.explosion_bound > 0.0) {
            return Err(invalid("explosion bound must be positive"));
        }
        Ok(())
    }
}
