//! Networks of live clocks: drifting, rate-steerable clocks that exchange
//! numeral-bearing signals and accept them only inside a phase window.
//!
//! The reading, light-cone and control math is generic over [`Real`]
//! (`f32` or `f64`). The simulation engine and analyses run on `f64`; the
//! aliases below name the concrete types they use.
//!
//! ```
//! use liveclock::engine::run;
//! use liveclock::scenario::presets::static_pair;
//!
//! // Two ideal clocks a quarter cycle apart: every arrival lands at phase 0.25.
//! let trace = run(&static_pair(0.4, 0.25, 20.0)).unwrap();
//! assert!(trace.arrivals().all(|r| (r.phase - 0.25).abs() < 1e-9 && r.accepted == Some(true)));
//! ```

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod clock;
pub mod control;
pub mod engine;
pub mod network;
pub mod node;
pub mod scalar;
pub mod scenario;
pub mod spacetime;
pub mod trace;

pub use scalar::Real;

pub type ClockReading = clock::ClockReading<f64>;
pub type ReadingPair = clock::ReadingPair<f64>;
pub type ClockState = clock::ClockState<f64>;
pub type DriftModel = clock::DriftModel<f64>;
pub type Vec3 = spacetime::Vec3<f64>;
pub type Worldline = spacetime::Worldline<f64>;
pub type PropagationModel = spacetime::PropagationModel<f64>;
pub type ControllerState = control::ControllerState<f64>;
pub type AimingPoint = control::AimingPoint<f64>;
