//! Per-node feedback toward aiming points.
//!
//! A node only steers on what it has legitimately measured or been told:
//! its own reception readings, and numerals carried in accepted payloads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{split_reading, writing_half_width, ClockReading, ReadingPair};
use crate::scalar::Real;

/// Default proportional gain, per cycle.
pub const DEFAULT_KP: f64 = 0.2;
/// Default integral gain, per cycle.
pub const DEFAULT_KI: f64 = 0.02;
/// Echo timeout as a multiple of the nominal round trip.
pub const DEFAULT_ECHO_TIMEOUT_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("no echo for the transmission at reading {m} within {timeout} cycles")]
    EchoTimeout { m: i64, timeout: f64 },
    #[error("invalid exchange: t_A = {t_a} is not before t'_A = {t_a_prime}")]
    InvalidExchange { t_a: f64, t_a_prime: f64 },
    #[error("invalid steering input: {0}")]
    InvalidInput(String),
}

/// What a channel's receiving (or echo-measuring) node steers toward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AimKind<T> {
    /// Arrival phase target.
    Phase { phi0: T },
    /// Constant echo count on the channel pair.
    Echo { delta0: T },
    /// Midpoint criterion `t_B = (t_A + t'_A)/2`.
    Einstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AimingPoint<T> {
    pub kind: AimKind<T>,
    /// Deviations no larger than this in magnitude are treated as zero.
    pub tolerance: T,
}

impl<T: Real> AimingPoint<T> {
    pub fn phase(phi0: T) -> Self {
        Self {
            kind: AimKind::Phase { phi0 },
            tolerance: T::zero(),
        }
    }

    /// A phase target must sit inside the writing window for `eta`.
    pub fn validate(&self, eta: T) -> Result<(), ControlError> {
        if let AimKind::Phase { phi0 } = self.kind {
            let w = writing_half_width(eta).map_err(|e| ControlError::InvalidInput(e.to_string()))?;
            if !(phi0.abs() < w) {
                return Err(ControlError::InvalidInput(format!(
                    "phase target {phi0} lies outside the writing window |phi| < {w}"
                )));
            }
        }
        if !(self.tolerance >= T::zero()) {
            return Err(ControlError::InvalidInput(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Applies the dead band.
    pub fn filter(&self, deviation: T) -> T {
        if deviation.abs() <= self.tolerance {
            T::zero()
        } else {
            deviation
        }
    }
}

/// Wrapped phase difference `rx.phase - phi0` in `(-1/2, 1/2]`.
pub fn phase_deviation<T: Real>(rx: &ClockReading<T>, phi0: T) -> T {
    split_reading(rx.phase - phi0)
        .expect("phase difference is finite")
        .phase
}

/// Echo count at `m`: A's reading at the first return from B minus `m`.
///
/// `forward` is the A->B log (A's transmit readings, B's receive readings);
/// `backward` is the B->A log. The first return is the first B->A entry
/// transmitted at or after B received A's signal from reading `m.0`.
pub fn echo_count<T: Real>(
    forward: &[ReadingPair<T>],
    backward: &[ReadingPair<T>],
    m: i64,
    timeout: T,
) -> Result<T, ControlError> {
    let timeout_err = || ControlError::EchoTimeout {
        m,
        timeout: timeout.to_f64().unwrap_or(f64::NAN),
    };
    let tol = T::lit(1e-9);
    let sent = forward
        .iter()
        .find(|p| p.tx.count == m && p.tx.phase.abs() <= tol)
        .ok_or_else(timeout_err)?;
    let received_at_b = sent.rx.value();
    let echo = backward
        .iter()
        .find(|p| p.tx.value() >= received_at_b)
        .ok_or_else(timeout_err)?;
    let delta = echo.rx.value() - T::from_i64(m).expect("count representable");
    if delta > timeout {
        return Err(timeout_err());
    }
    Ok(delta)
}

/// Einstein residual `t_B - (t_A + t'_A)/2`; zero iff B is synchronous to A
/// on this exchange.
pub fn einstein_residual<T: Real>(t_a: T, t_b: T, t_a_prime: T) -> Result<T, ControlError> {
    if !(t_a < t_a_prime) {
        return Err(ControlError::InvalidExchange {
            t_a: t_a.to_f64().unwrap_or(f64::NAN),
            t_a_prime: t_a_prime.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((t_b - t_a) - (t_a_prime - t_a) * T::half())
}

/// Discrete PI controller producing rate-correction increments.
///
/// The law is `u = -(kp*e + ki*I)` on the weighted mean deviation `e` with
/// integral `I`; `steer` returns the increment `u_n - u_{n-1}`, so a clock
/// that accumulates increments into its rate correction ends up running
/// at correction `u_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState<T> {
    pub kp: T,
    pub ki: T,
    pub integral: T,
    pub last_error: T,
    /// Magnitude bound on each increment.
    pub command_bound: T,
    /// Anti-windup bound on `|integral|`.
    pub integral_bound: T,
    /// Bound on `|output|`; set to the clock's correction clamp so the
    /// controller never believes in correction the clock did not apply.
    pub output_bound: T,
    /// Sum of all increments issued so far.
    pub output: T,
}

impl<T: Real> ControllerState<T> {
    pub fn new(kp: T, ki: T, command_bound: T) -> Self {
        Self {
            kp,
            ki,
            integral: T::zero(),
            last_error: T::zero(),
            command_bound,
            integral_bound: T::infinity(),
            output_bound: T::infinity(),
            output: T::zero(),
        }
    }

    pub fn with_integral_bound(mut self, bound: T) -> Self {
        self.integral_bound = bound;
        self
    }

    pub fn with_output_bound(mut self, bound: T) -> Self {
        self.output_bound = bound;
        self
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let ok = self.kp >= T::zero()
            && self.ki >= T::zero()
            && self.command_bound >= T::zero()
            && self.integral_bound >= T::zero()
            && self.output_bound >= T::zero();
        if ok {
            Ok(())
        } else {
            Err(ControlError::InvalidInput(
                "gains and bounds must be non-negative".into(),
            ))
        }
    }

    /// Folds a set of weighted deviations into one rate-correction increment.
    ///
    /// An empty list (or all-zero weights) coasts: the increment is zero and
    /// the controller state is left untouched.
    pub fn steer(&mut self, deviations: &[T], weights: &[T]) -> Result<T, ControlError> {
        if deviations.len() != weights.len() {
            return Err(ControlError::InvalidInput(format!(
                "{} deviations but {} weights",
                deviations.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= T::zero())) {
            return Err(ControlError::InvalidInput(format!(
                "weights must be non-negative, got {w}"
            )));
        }
        let total: T = weights.iter().fold(T::zero(), |a, &w| a + w);
        if deviations.is_empty() || total == T::zero() {
            return Ok(T::zero());
        }
        let error = deviations.iter().zip(weights).fold(T::zero(), |a, (&d, &w)| a + d * w) / total;

        let b = self.integral_bound;
        self.integral = (self.integral + error).max(-b).min(b);
        let ob = self.output_bound;
        let target = (-(self.kp * error + self.ki * self.integral)).max(-ob).min(ob);
        let c = self.command_bound;
        let delta = (target - self.output).max(-c).min(c);
        self.output = self.output + delta;
        self.last_error = error;
        Ok(delta)
    }
}
