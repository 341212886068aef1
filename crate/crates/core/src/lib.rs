//! Solver for the online makespan-scheduling game on identical machines.
//!
//! Trimmed-scenarios (canonical multisets of per-machine integer job counts) form a
//! finite game graph. Value iteration over that graph yields the optimal
//! competitive-ratio approximation together with executable scheduler and adversary
//! strategies. A separate exact solver covers the bounded semi-online variant.

pub mod cache;
pub mod error;
pub mod grid;
pub mod opt;
pub mod players;
pub mod protocol;
pub mod rational;
pub mod scenario;
pub mod semi;
pub mod solver;
pub mod state;
pub mod transition;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{make_config, ConfigSpec, EpsilonConfig, GridValue};
pub use rational::Rational;
