//! Density-matrix representation of classical and quantum game theory.
//!
//! Classical games become diagonal Hermitian payoff operators on a joint
//! tensor-product space, payoffs are trace contractions, Nash equilibria
//! are fixed points of a constructive mapping, and operator-level quantum
//! games compile down to the same abstract payoff-operator form.

pub mod dynamics;
pub mod error;
pub mod format;
pub mod game;
pub mod generators;
pub mod linalg;
pub mod nash;
pub mod quantum;

pub use error::{Error, Result};
