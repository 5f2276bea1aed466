//! Worldlines and signal arrival times in flat (or conformally flat) space.
//!
//! Arrival times come from intersecting the emission event's future light
//! cone with the receiver's worldline:
//!
//! ```text
//! |x_rx(t_e + tau) - x_e| = (c / k) * tau,   tau > 0
//! ```
//!
//! where `k` is the optional conformal factor scaling all delays. For a
//! subluminal receiver the left side grows slower than the right, so the
//! root is unique. Circular worldlines make the equation transcendental; it
//! is solved by Newton iteration inside a bracket, falling back to bisection
//! whenever a step would leave the bracket.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpacetimeError {
    #[error("receiver speed {speed} is not below the signal speed {limit}")]
    Superluminal { speed: f64, limit: f64 },
    #[error("no future light-cone intersection: {0}")]
    NoFutureIntersection(String),
    #[error("light-cone solver did not converge after {iterations} iterations (residual {residual:e} m)")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("invalid propagation model: {0}")]
    InvalidModel(String),
}

/// Cartesian 3-vector in meters (or m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(
    from = "[T; 3]",
    into = "[T; 3]",
    bound(serialize = "T: Serialize + Clone", deserialize = "T: Deserialize<'de>")
)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> T {
        // hypot keeps tiny separations from underflowing when squared
        self.x.hypot(self.y).hypot(self.z)
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Prescribed spatial trajectory of a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "snake_case",
    deny_unknown_fields,
    bound(serialize = "T: Serialize + Clone", deserialize = "T: Deserialize<'de> + Default")
)]
pub enum Worldline<T> {
    Static {
        position: Vec3<T>,
    },
    UniformVelocity {
        origin: Vec3<T>,
        velocity: Vec3<T>,
    },
    /// Circle in the plane `z = center.z`, counter-clockwise for positive
    /// `angular_rate`.
    Circular {
        center: Vec3<T>,
        radius: T,
        angular_rate: T,
        #[serde(default)]
        initial_angle: T,
    },
}

impl<T: Real> Worldline<T> {
    pub fn fixed(x: T, y: T, z: T) -> Self {
        Worldline::Static {
            position: Vec3::new(x, y, z),
        }
    }

    pub fn position_at(&self, t: T) -> Vec3<T> {
        match *self {
            Worldline::Static { position } => position,
            Worldline::UniformVelocity { origin, velocity } => origin + velocity * t,
            Worldline::Circular {
                center,
                radius,
                angular_rate,
                initial_angle,
            } => {
                let (s, c) = (angular_rate * t + initial_angle).sin_cos();
                center + Vec3::new(radius * c, radius * s, T::zero())
            }
        }
    }

    pub fn velocity_at(&self, t: T) -> Vec3<T> {
        match *self {
            Worldline::Static { .. } => Vec3::zero(),
            Worldline::UniformVelocity { velocity, .. } => velocity,
            Worldline::Circular {
                radius,
                angular_rate,
                initial_angle,
                ..
            } => {
                let (s, c) = (angular_rate * t + initial_angle).sin_cos();
                let v = radius * angular_rate;
                Vec3::new(-v * s, v * c, T::zero())
            }
        }
    }

    /// Supremum of the speed over all time (constant for every kind here).
    pub fn max_speed(&self) -> T {
        match *self {
            Worldline::Static { .. } => T::zero(),
            Worldline::UniformVelocity { velocity, .. } => velocity.norm(),
            Worldline::Circular {
                radius, angular_rate, ..
            } => (radius * angular_rate).abs(),
        }
    }
}

/// Flat-metric signal propagation hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel<T> {
    /// Signal speed, m/s.
    pub c: T,
    /// Uniform scaling of all delays (conformally flat case). `None` means 1.
    pub conformal_factor: Option<T>,
    /// Apply the special-relativistic proper-rate factor to moving clocks.
    pub relativistic_rates: bool,
}

impl<T: Real> Default for PropagationModel<T> {
    fn default() -> Self {
        Self {
            c: T::lit(SPEED_OF_LIGHT),
            conformal_factor: None,
            relativistic_rates: false,
        }
    }
}

impl<T: Real> PropagationModel<T> {
    pub fn with_speed(c: T) -> Self {
        Self { c, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SpacetimeError> {
        if !(self.c > T::zero()) || !self.c.is_finite() {
            return Err(SpacetimeError::InvalidModel(format!(
                "signal speed must be positive, got {}",
                self.c
            )));
        }
        if let Some(k) = self.conformal_factor {
            if !(k > T::zero()) || !k.is_finite() {
                return Err(SpacetimeError::InvalidModel(format!(
                    "conformal factor must be positive, got {k}"
                )));
            }
        }
        Ok(())
    }

    /// Delay scaling factor; 1 when unset.
    pub fn delay_scale(&self) -> T {
        self.conformal_factor.unwrap_or_else(T::one)
    }

    /// Coordinate distance covered per unit coordinate time by a signal.
    pub fn effective_speed(&self) -> T {
        self.c / self.delay_scale()
    }
}

/// Root-finder tolerances for [`arrival_time_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Absolute step tolerance on the delay, seconds.
    pub abs_tol: T,
    /// Relative step tolerance on the delay.
    pub rel_tol: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-15),
            rel_tol: T::lit(1e-12).max(T::lit(4.0) * T::epsilon()),
            max_iterations: 64,
        }
    }
}

/// Coordinate time at which a signal emitted at `emit_pos`, `emit_t`
/// reaches `receiver`, using default solver tolerances.
pub fn arrival_time<T: Real>(
    emit_pos: Vec3<T>,
    emit_t: T,
    receiver: &Worldline<T>,
    model: &PropagationModel<T>,
) -> Result<T, SpacetimeError> {
    arrival_time_with(emit_pos, emit_t, receiver, model, &SolverConfig::default())
}

/// Propagation delay `tau` such that the arrival happens at `emit_t + tau`.
pub fn propagation_delay<T: Real>(
    emit_pos: Vec3<T>,
    emit_t: T,
    receiver: &Worldline<T>,
    model: &PropagationModel<T>,
    cfg: &SolverConfig<T>,
) -> Result<T, SpacetimeError> {
    model.validate()?;
    let ce = model.effective_speed();
    let vmax = receiver.max_speed();
    if !(vmax < ce) {
        return Err(SpacetimeError::Superluminal {
            speed: vmax.to_f64().unwrap_or(f64::NAN),
            limit: ce.to_f64().unwrap_or(f64::NAN),
        });
    }
    let d0 = (receiver.position_at(emit_t) - emit_pos).norm();
    if !(d0 > T::zero()) {
        return Err(SpacetimeError::NoFutureIntersection(
            "receiver coincides with the emission event".into(),
        ));
    }

    // f(tau) = ce*tau - |x(t_e + tau) - x_e| is strictly increasing,
    // f(0) < 0 and f(d0 / (ce - vmax)) >= 0.
    let residual = |tau: T| -> (T, T) {
        let t = emit_t + tau;
        let u = receiver.position_at(t) - emit_pos;
        let dist = u.norm();
        let f = ce * tau - dist;
        let slope = if dist > T::zero() {
            ce - u.dot(receiver.velocity_at(t)) / dist
        } else {
            ce
        };
        (f, slope)
    };

    let mut lo = T::zero();
    let mut hi = d0 / (ce - vmax);
    let mut tau = d0 / ce;
    let mut last_f = T::infinity();
    for _ in 0..cfg.max_iterations {
        let (f, slope) = residual(tau);
        last_f = f;
        if f == T::zero() {
            return Ok(tau);
        }
        if f < T::zero() {
            lo = tau;
        } else {
            hi = tau;
        }
        let mut next = tau - f / slope;
        if !(next > lo && next < hi) {
            next = (lo + hi) * T::half();
        }
        let step = (next - tau).abs();
        tau = next;
        if step <= cfg.abs_tol + cfg.rel_tol * tau || hi - lo <= cfg.abs_tol {
            return Ok(tau);
        }
    }
    Err(SpacetimeError::NonConvergence {
        iterations: cfg.max_iterations,
        residual: last_f.abs().to_f64().unwrap_or(f64::NAN),
    })
}

/// Like [`arrival_time`] with explicit solver tolerances.
pub fn arrival_time_with<T: Real>(
    emit_pos: Vec3<T>,
    emit_t: T,
    receiver: &Worldline<T>,
    model: &PropagationModel<T>,
    cfg: &SolverConfig<T>,
) -> Result<T, SpacetimeError> {
    let tau = propagation_delay(emit_pos, emit_t, receiver, model, cfg)?;
    let t_arr = emit_t + tau;
    if !(t_arr > emit_t) {
        return Err(SpacetimeError::NoFutureIntersection(format!(
            "delay {tau:e} s is below the time resolution at t = {emit_t}"
        )));
    }
    Ok(t_arr)
}

/// Proper-rate factor `sqrt(1 - v^2/c^2)` when relativistic rates are on,
/// otherwise 1.
pub fn kinematic_rate_factor<T: Real>(w: &Worldline<T>, t: T, model: &PropagationModel<T>) -> T {
    if !model.relativistic_rates {
        return T::one();
    }
    let beta = w.velocity_at(t).norm() / model.c;
    (T::one() - beta * beta).sqrt()
}
