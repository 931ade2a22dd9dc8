//! Ground-state search for Ising models by parallel-trial simulated
//! annealing, with exact small-instance machinery to verify the sampler.
//!
//! The crate is organized around one Markov-chain move: evaluate every
//! single-spin flip at once, admit each flip independently with its own
//! acceptance probability, then apply exactly one of the admitted flips,
//! chosen uniformly.  [`kernels`] implements that move (and a classical
//! single-proposal baseline) for simulation; [`exact`] builds the same
//! dynamics as explicit transition matrices on small instances and solves
//! for stationary distributions; [`landscape`] measures the energy-barrier
//! structure that governs how fast cooling may proceed; [`schedules`]
//! supplies inverse-temperature schedules and the summability test that
//! separates convergent from non-convergent cooling; [`reference`] holds
//! deliberately naive re-implementations used as cross-check oracles.

pub mod exact;
pub mod ising;
pub mod kernels;
pub mod landscape;
pub mod reference;
pub mod schedules;

pub use ising::{CavityCache, InstanceError, IsingInstance, SpinConfiguration};
