//! A single live clock: reading convention, writing window, drift and rate
//! steering.
//!
//! A reading is one real number of cycles. It is split on demand into an
//! integer cycle count and a phase in `(-1/2, 1/2]`, so a reading of `3.75`
//! is cycle 4 at phase `-0.25`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Default bound on the commanded fractional rate correction.
pub const DEFAULT_CORRECTION_BOUND: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClockError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("effective tick rate {0} is not positive")]
    NonPositiveRate(f64),
}

/// A reading split into cycle count and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockReading<T> {
    pub count: i64,
    pub phase: T,
}

impl<T: Real> ClockReading<T> {
    /// Recombines count and phase into a reading in cycles.
    pub fn value(&self) -> T {
        T::from_i64(self.count).expect("count representable") + self.phase
    }
}

/// Splits `value` so that `count` is the smallest integer `>= value - 1/2`.
pub fn split_reading<T: Real>(value: T) -> Result<ClockReading<T>, ClockError> {
    if !value.is_finite() {
        return Err(ClockError::InvalidArgument(format!(
            "reading must be finite, got {value}"
        )));
    }
    let half = T::half();
    let mut count = (value - half).ceil();
    let mut phase = value - count;
    // guard against rounding in `value - half` at very large magnitudes
    if phase > half {
        count = count + T::one();
        phase = value - count;
    } else if phase <= -half {
        count = count - T::one();
        phase = value - count;
    }
    let count = count
        .to_i64()
        .ok_or_else(|| ClockError::InvalidArgument(format!("reading {value} overflows the cycle counter")))?;
    Ok(ClockReading { count, phase })
}

fn check_eta<T: Real>(eta: T) -> Result<(), ClockError> {
    if eta > T::zero() && eta < T::one() {
        Ok(())
    } else {
        Err(ClockError::InvalidArgument(format!(
            "eta must lie strictly inside (0, 1), got {eta}"
        )))
    }
}

/// Half-width `(1 - eta)/2` of the writing window.
pub fn writing_half_width<T: Real>(eta: T) -> Result<T, ClockError> {
    check_eta(eta)?;
    Ok((T::one() - eta) / T::two())
}

/// True iff the reading's phase lies strictly inside the writing window.
pub fn in_writing_phase<T: Real>(reading: &ClockReading<T>, eta: T) -> Result<bool, ClockError> {
    let w = writing_half_width(eta)?;
    Ok(reading.phase.abs() < w)
}

/// A transmit/receive pair of readings, as kept in a channel log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadingPair<T> {
    pub tx: ClockReading<T>,
    pub rx: ClockReading<T>,
}

/// Two-component power-law frequency noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel<T> {
    /// Standard deviation of the white FM fractional frequency, drawn once per cycle.
    pub white_fm_sigma: T,
    /// Standard deviation of the random-walk FM step per cycle.
    pub rw_fm_sigma: T,
    pub seed: u64,
}

impl<T: Real> DriftModel<T> {
    pub fn ideal() -> Self {
        Self {
            white_fm_sigma: T::zero(),
            rw_fm_sigma: T::zero(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ClockError> {
        if !(self.white_fm_sigma >= T::zero()) || !(self.rw_fm_sigma >= T::zero()) {
            return Err(ClockError::InvalidArgument(format!(
                "drift sigmas must be non-negative, got white {} / random walk {}",
                self.white_fm_sigma, self.rw_fm_sigma
            )));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.white_fm_sigma == T::zero() && self.rw_fm_sigma == T::zero()
    }
}

/// Running drift accumulator: seeded generator, random-walk state and the
/// fractional frequency offset in force for the current cycle.
#[derive(Debug, Clone)]
pub struct DriftState<T> {
    model: DriftModel<T>,
    rng: ChaCha8Rng,
    walk: T,
    current: T,
    samples: u64,
}

impl<T: Real> DriftState<T> {
    /// Creates the accumulator and draws the offset for the first cycle.
    pub fn new(model: DriftModel<T>) -> Self {
        let mut state = Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            walk: T::zero(),
            current: T::zero(),
            samples: 0,
        };
        state.redraw();
        state
    }

    pub fn model(&self) -> &DriftModel<T> {
        &self.model
    }

    /// Fractional frequency offset for the current cycle.
    pub fn current(&self) -> T {
        self.current
    }

    /// Number of per-cycle samples drawn so far.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Draws the offset for the next cycle and returns it.
    pub fn redraw(&mut self) -> T {
        // Always consume two normals so the stream layout does not depend on
        // which sigmas are zero.
        let z_walk: f64 = StandardNormal.sample(&mut self.rng);
        let z_white: f64 = StandardNormal.sample(&mut self.rng);
        self.walk = self.walk + self.model.rw_fm_sigma * T::lit(z_walk);
        self.current = self.walk + self.model.white_fm_sigma * T::lit(z_white);
        self.samples += 1;
        self.current
    }
}

/// State of one steerable clock.
#[derive(Debug, Clone)]
pub struct ClockState<T> {
    /// Reading in cycles.
    pub reading: T,
    /// Nominal cycles per unit coordinate time.
    pub rate: T,
    /// Commanded fractional rate correction.
    pub rate_correction: T,
    /// Duty parameter: fraction of each cycle reserved for reading.
    pub eta: T,
    correction_bound: T,
    drift: DriftState<T>,
}

impl<T: Real> ClockState<T> {
    pub fn new(rate: T, eta: T, drift: DriftModel<T>) -> Result<Self, ClockError> {
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(ClockError::InvalidArgument(format!(
                "nominal rate must be positive, got {rate}"
            )));
        }
        check_eta(eta)?;
        drift.validate()?;
        Ok(Self {
            reading: T::zero(),
            rate,
            rate_correction: T::zero(),
            eta,
            correction_bound: T::lit(DEFAULT_CORRECTION_BOUND),
            drift: DriftState::new(drift),
        })
    }

    /// An ideal unit-rate clock.
    pub fn ideal(eta: T) -> Result<Self, ClockError> {
        Self::new(T::one(), eta, DriftModel::ideal())
    }

    pub fn with_reading(mut self, reading: T) -> Self {
        self.reading = reading;
        self
    }

    /// Sets the symmetric clamp on `rate_correction`; must lie in `[0, 1)`.
    pub fn with_correction_bound(mut self, bound: T) -> Result<Self, ClockError> {
        if !(bound >= T::zero() && bound < T::one()) {
            return Err(ClockError::InvalidArgument(format!(
                "correction bound must lie in [0, 1), got {bound}"
            )));
        }
        self.correction_bound = bound;
        self.rate_correction = self.rate_correction.max(-bound).min(bound);
        Ok(self)
    }

    pub fn correction_bound(&self) -> T {
        self.correction_bound
    }

    pub fn drift(&self) -> &DriftState<T> {
        &self.drift
    }

    pub fn split(&self) -> Result<ClockReading<T>, ClockError> {
        split_reading(self.reading)
    }

    /// Cycles per unit coordinate time during the current cycle.
    pub fn effective_rate(&self, kinematic_factor: T) -> Result<T, ClockError> {
        let r = self.rate * (T::one() + self.drift.current + self.rate_correction) * kinematic_factor;
        if r > T::zero() && r.is_finite() {
            Ok(r)
        } else {
            Err(ClockError::NonPositiveRate(r.to_f64().unwrap_or(f64::NAN)))
        }
    }

    /// Reading after `dt` assuming no integer reading is crossed.
    pub fn reading_after(&self, dt: T, kinematic_factor: T) -> Result<T, ClockError> {
        Ok(self.reading + self.effective_rate(kinematic_factor)? * dt)
    }

    /// The next integer reading strictly above the current one.
    pub fn next_tick(&self) -> T {
        self.reading.floor() + T::one()
    }

    /// Coordinate time until the reading reaches `target` at the current rate.
    pub fn time_until(&self, target: T, kinematic_factor: T) -> Result<T, ClockError> {
        Ok((target - self.reading) / self.effective_rate(kinematic_factor)?)
    }

    /// Lands the reading exactly on integer `count` and draws the drift
    /// offset for the cycle that starts there.
    pub fn land_on_tick(&mut self, count: i64) {
        self.reading = T::from_i64(count).expect("count representable");
        self.drift.redraw();
    }

    /// Integrates the reading over `dt` of coordinate time.
    ///
    /// The drift offset is piecewise constant over cycles: a fresh sample is
    /// drawn each time the reading crosses an integer, so splitting `dt`
    /// into pieces gives the same result as a single call.
    pub fn advance(&mut self, dt: T, kinematic_factor: T) -> Result<(), ClockError> {
        if !(dt >= T::zero()) || !dt.is_finite() {
            return Err(ClockError::InvalidArgument(format!(
                "dt must be a finite non-negative duration, got {dt}"
            )));
        }
        if !(kinematic_factor > T::zero()) {
            return Err(ClockError::InvalidArgument(format!(
                "kinematic factor must be positive, got {kinematic_factor}"
            )));
        }
        let mut remaining = dt;
        loop {
            let next = self.next_tick();
            let to_cross = self.time_until(next, kinematic_factor)?;
            if to_cross <= remaining {
                remaining = remaining - to_cross;
                let count = next.to_i64().expect("count representable");
                self.land_on_tick(count);
            } else {
                self.reading = self.reading_after(remaining, kinematic_factor)?;
                return Ok(());
            }
        }
    }

    /// Adds `delta` to the rate correction, clamped to the configured bound.
    pub fn command_rate(&mut self, delta: T) {
        let b = self.correction_bound;
        self.rate_correction = (self.rate_correction + delta).max(-b).min(b);
    }
}
