//! Simulation engine for a rate-slope synaptic plasticity rule.
//!
//! The library generates random firing-rate trajectories, samples discrete-time
//! spike trains from them, and applies three weight-update rules: a rate-based
//! rule proportional to the postsynaptic slope times the presynaptic rate, its
//! spike-gated variant, and a classical nearest-neighbor STDP rule. On top of
//! the rules sit the experiment drivers (timing-difference curves, rule
//! agreement, closed-loop slope statistics) and a small layered-network module
//! that checks the rule against finite-difference gradients of an objective.
//!
//! All randomness flows through explicitly derived [`stream`]s, so every
//! experiment is reproducible bit-for-bit regardless of thread count.

pub mod error;
pub mod experiments;
pub mod gradlink;
pub mod rates;
pub mod rules;
pub mod spikes;
pub mod stats;
pub mod stream;
pub mod verify;

pub use error::Error;
