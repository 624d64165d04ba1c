//! Simulation lab for multi-armed bandit learning against adaptive
//! adversaries.
//!
//! The crate models the repeated game between a randomized learner and a
//! deterministic, history-dependent loss oracle, and provides:
//!
//! - the game protocol and transcript recording ([`game`]),
//! - concrete adversary constructions, from oblivious tables to
//!   unbounded-memory traps ([`adversaries`]),
//! - exponential-weights learners and trivial baselines ([`learners`]),
//! - the mini-batching wrapper that trades standard regret for policy
//!   regret against memory-bounded adversaries ([`minibatch`]),
//! - exact counterfactual-replay regret metrics, including switching and
//!   transformation-based variants ([`metrics`]),
//! - a reproducible Monte-Carlo experiment harness with CSV/JSON/SVG
//!   output ([`harness`]).

pub mod adversaries;
pub mod game;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod minibatch;
pub mod plot;
pub mod rng;

pub use game::{run_game, Action, GameError, Learner, LossOracle, Memory, OracleError, Transcript};
