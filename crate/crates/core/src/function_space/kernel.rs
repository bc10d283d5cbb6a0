use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The density 140·u³(1−u)³ on u ∈ [0,1], rescaled to [lo, hi].
///
/// It is C² with closed-form distribution function and partial first
/// moment, which lets both mollifications be computed exactly on grid
/// functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpKernel {
    lo: f64,
    hi: f64,
}

impl BumpKernel {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("kernel support [{lo}, {hi}] is not a proper interval")));
        }
        Ok(BumpKernel { lo, hi })
    }

    /// Default time kernel: support [0.1, 0.9] inside (0, 1).
    pub fn time() -> Self {
        BumpKernel { lo: 0.1, hi: 0.9 }
    }

    /// Default space kernel: support [−1, 1].
    pub fn space() -> Self {
        BumpKernel { lo: -1.0, hi: 1.0 }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// max(|lo|, |hi|).
    pub fn radius(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    fn unit(&self, z: f64) -> f64 {
        ((z - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        if z <= self.lo || z >= self.hi {
            return 0.0;
        }
        let u = self.unit(z);
        140.0 * (u * (1.0 - u)).powi(3) / (self.hi - self.lo)
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= self.lo {
            return 0.0;
        }
        if z >= self.hi {
            return 1.0;
        }
        let u = self.unit(z);
        let u4 = u.powi(4);
        140.0 * u4 * (0.25 - 0.6 * u + 0.5 * u * u - u * u * u / 7.0)
    }

    /// ∫_{−∞}^{z} y·α(y) dy.
    pub fn partial_mean(&self, z: f64) -> f64 {
        if z >= self.hi {
            return self.mean();
        }
        let u = self.unit(z);
        let w = self.hi - self.lo;
        let u5 = u.powi(5);
        let q = 140.0 * u5 * (0.2 - 0.5 * u + 3.0 / 7.0 * u * u - 0.125 * u * u * u);
        self.lo * self.cdf(z) + w * q
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// E[(a + Y/n)_+] for Y ~ α.
    pub fn positive_part_mean(&self, a: f64, n: f64) -> f64 {
        let y_star = -n * a;
        a * (1.0 - self.cdf(y_star)) + (self.mean() - self.partial_mean(y_star)) / n
    }
}
