//! Simulation and optimization toolkit for a UAV-assisted intelligent
//! reflecting surface (IRS) network with symbiotic backscatter links.
//!
//! A rotary-wing UAV flies over a set of ground IRSs. Each IRS reflects the
//! UAV's primary uplink towards the base station while piggybacking its own
//! low-rate on/off keying stream on the reflection. The crate provides:
//!
//! * Rician channel models and deterministic Monte-Carlo sampling
//!   ([`channel`]),
//! * detection/rate expressions for the primary and backscatter links
//!   ([`physical_layer`]),
//! * closed-form IRS phase configurations and the expected-rate/SNR formulas
//!   they induce ([`closed_forms`]),
//! * small dense convex solvers (LP / QP / log-barrier Newton) used by the
//!   planners ([`convex`]),
//! * the weighted-sum and max-min fair trajectory/scheduling optimizers
//!   ([`weighted_sum`], [`fairness`]),
//! * reference schemes and comparison sweeps ([`benchmarks`]).
//!
//! Everything is deterministic for a fixed scenario and RNG seed.

pub mod benchmarks;
pub mod channel;
pub mod closed_forms;
pub mod convex;
pub mod error;
pub mod fairness;
pub mod physical_layer;
pub mod scenario;
pub mod trajectory;
pub mod weighted_sum;

pub use channel::LinkState;
pub use closed_forms::PhaseSchedule;
pub use error::Error;
pub use scenario::{Scenario, SolveReport};
pub use trajectory::{Schedule, Trajectory};
pub use weighted_sum::PlannerSolution;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
