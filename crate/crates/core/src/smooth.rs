//! Twice continuously differentiable functions of (t, x) with their partials.

use std::sync::Arc;

/// A C^{1,2} function f(t, x) with the partials the generator and Itô's
/// formula need.
pub trait Smooth: Send + Sync {
    fn value(&self, t: f64, x: f64) -> f64;
    fn d_t(&self, t: f64, x: f64) -> f64;
    fn d_x(&self, t: f64, x: f64) -> f64;
    fn d_xx(&self, t: f64, x: f64) -> f64;

    /// Support in x outside of which the function and its partials vanish,
    /// if any.
    fn x_support(&self) -> Option<(f64, f64)> {
        None
    }
}

/// f(t, x) = x.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Smooth for Identity {
    fn value(&self, _t: f64, x: f64) -> f64 {
        x
    }
    fn d_t(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
    fn d_x(&self, _t: f64, _x: f64) -> f64 {
        1.0
    }
    fn d_xx(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
}

/// f(t, x) = x².
#[derive(Debug, Clone, Copy, Default)]
pub struct Square;

impl Smooth for Square {
    fn value(&self, _t: f64, x: f64) -> f64 {
        x * x
    }
    fn d_t(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
    fn d_x(&self, _t: f64, x: f64) -> f64 {
        2.0 * x
    }
    fn d_xx(&self, _t: f64, _x: f64) -> f64 {
        2.0
    }
}

/// Time-independent C² bump `height · (1 − u²)³` with u = (x − center)/radius,
/// zero for |u| ≥ 1.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
    pub height: f64,
}

impl Bump {
    pub fn new(center: f64, radius: f64, height: f64) -> Self {
        Bump { center, radius, height }
    }

    fn u(&self, x: f64) -> Option<f64> {
        let u = (x - self.center) / self.radius;
        (u.abs() < 1.0).then_some(u)
    }
}

impl Smooth for Bump {
    fn value(&self, _t: f64, x: f64) -> f64 {
        self.u(x).map_or(0.0, |u| self.height * (1.0 - u * u).powi(3))
    }
    fn d_t(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
    fn d_x(&self, _t: f64, x: f64) -> f64 {
        self.u(x)
            .map_or(0.0, |u| self.height * -6.0 * u * (1.0 - u * u).powi(2) / self.radius)
    }
    fn d_xx(&self, _t: f64, x: f64) -> f64 {
        self.u(x).map_or(0.0, |u| {
            let w = 1.0 - u * u;
            self.height * (-6.0 * w * w + 24.0 * u * u * w) / (self.radius * self.radius)
        })
    }
    fn x_support(&self) -> Option<(f64, f64)> {
        Some((self.center - self.radius, self.center + self.radius))
    }
}

/// Product of a smooth time profile and a [`Bump`] in x. The time profile is
/// `(1 − v²)³` with v = (t − t_center)/t_radius.
#[derive(Debug, Clone, Copy)]
pub struct SpaceTimeBump {
    pub space: Bump,
    pub t_center: f64,
    pub t_radius: f64,
}

impl SpaceTimeBump {
    fn profile(&self, t: f64) -> (f64, f64) {
        let v = (t - self.t_center) / self.t_radius;
        if v.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let w = 1.0 - v * v;
        (w.powi(3), -6.0 * v * w * w / self.t_radius)
    }
}

impl Smooth for SpaceTimeBump {
    fn value(&self, t: f64, x: f64) -> f64 {
        self.profile(t).0 * self.space.value(t, x)
    }
    fn d_t(&self, t: f64, x: f64) -> f64 {
        self.profile(t).1 * self.space.value(t, x)
    }
    fn d_x(&self, t: f64, x: f64) -> f64 {
        self.profile(t).0 * self.space.d_x(t, x)
    }
    fn d_xx(&self, t: f64, x: f64) -> f64 {
        self.profile(t).0 * self.space.d_xx(t, x)
    }
    fn x_support(&self) -> Option<(f64, f64)> {
        self.space.x_support()
    }
}

type Partial = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A smooth function assembled from closures.
#[derive(Clone)]
pub struct FnSmooth {
    pub value: Partial,
    pub d_t: Partial,
    pub d_x: Partial,
    pub d_xx: Partial,
}

impl FnSmooth {
    pub fn new(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        d_t: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        d_x: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        d_xx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FnSmooth {
            value: Arc::new(value),
            d_t: Arc::new(d_t),
            d_x: Arc::new(d_x),
            d_xx: Arc::new(d_xx),
        }
    }
}

impl std::fmt::Debug for FnSmooth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FnSmooth")
    }
}

impl Smooth for FnSmooth {
    fn value(&self, t: f64, x: f64) -> f64 {
        (self.value)(t, x)
    }
    fn d_t(&self, t: f64, x: f64) -> f64 {
        (self.d_t)(t, x)
    }
    fn d_x(&self, t: f64, x: f64) -> f64 {
        (self.d_x)(t, x)
    }
    fn d_xx(&self, t: f64, x: f64) -> f64 {
        (self.d_xx)(t, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_partials(f: &dyn Smooth, t: f64, x: f64) {
        let h = 1e-5;
        let fx = (f.value(t, x + h) - f.value(t, x - h)) / (2.0 * h);
        let fxx = (f.d_x(t, x + h) - f.d_x(t, x - h)) / (2.0 * h);
        let ft = (f.value(t + h, x) - f.value(t - h, x)) / (2.0 * h);
        assert!((fx - f.d_x(t, x)).abs() < 1e-7, "d_x at {x}");
        assert!((fxx - f.d_xx(t, x)).abs() < 1e-6, "d_xx at {x}");
        assert!((ft - f.d_t(t, x)).abs() < 1e-7, "d_t at {t}");
    }

    #[test]
    fn bump_partials_match_finite_differences() {
        let b = Bump::new(0.3, 1.2, 0.8);
        for &x in &[-0.7, -0.1, 0.3, 0.9, 1.4] {
            check_partials(&b, 0.5, x);
        }
        assert_eq!(b.value(0.0, 2.0), 0.0);
    }

    #[test]
    fn space_time_bump_partials_match_finite_differences() {
        let b = SpaceTimeBump { space: Bump::new(0.0, 1.0, 1.0), t_center: 0.5, t_radius: 0.3 };
        for &(t, x) in &[(0.4, 0.2), (0.6, -0.5), (0.75, 0.1)] {
            check_partials(&b, t, x);
        }
    }
}
