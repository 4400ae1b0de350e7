//! Slot-level simulator for multi-band heterogeneous cellular networks.
//!
//! Macro base stations serve a sub-6 GHz band with omnidirectional antennas and
//! synchronized TDD switching; pico base stations serve a mmWave band with
//! directional beams and may pick their own switching points. Mobile users move
//! by a truncated Lévy walk and carry asymmetric uplink/downlink demands.
//!
//! The scheduling pipeline is split the same way a slot decision is made:
//!
//! * [`association`]: optimal-matching user association over pseudo
//!   supply-demand weights, solved with [`assignment::optimal_matching`].
//! * [`tdd`]: per-BS switching points from per-user balance points.
//! * [`scsa`]: subchannel allocation by spectral clustering of per-band
//!   interference graphs, followed by conflict repair.
//! * [`baselines`]: load-based and bandit-based association with the fixed
//!   midpoint / first-idle channel scheme.
//!
//! [`omsc`] chains the three stages into one scheduler, and [`engine`] ties them to the channel model in [`radio`] and the mobility
//! process in [`mobility`].

// `!(x > 0.0)` is used on purpose so NaN is rejected too; reference values in
// tests keep every digit the oracle printed.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod assignment;
pub mod association;
pub mod baselines;
pub mod decision;
pub mod engine;
pub mod geometry;
pub mod mobility;
pub mod model;
pub mod omsc;
pub mod radio;
pub mod scsa;
pub mod tdd;
pub mod units;

pub use decision::{validate_decision, Assignment, Decision, ScheduleError, SlotInput, Violation};
pub use engine::{run, step, Aggregate, Algorithm, EngineError, RunLog, Scenario, Scheduler, SeedRun, World};
pub use geometry::{Rect, Vec2};
pub use model::{
    Antenna, Association, BaseStation, BsClass, BsId, Demand, Link, ModelError, NetworkConfig, SlotMetrics, UserId,
    UserState,
};
