//! Optimal-control toolkit for the undiscounted infinite-horizon restless
//! N-armed bandit.
//!
//! The crate works with the population representation of a bandit with `N`
//! homogeneous two-action arms: the state is the fraction of arms per arm
//! state (a point of the simplex), the control is the fraction of arms per
//! state taking the active action, and the budget forces the active fraction
//! to equal `alpha` at every step. On top of that representation it provides:
//!
//! - [`model`] — the single-armed model, simplex/control vectors, the
//!   deterministic transition `phi` and the instant reward `R`;
//! - [`lp`] — a self-contained dense bounded-variable simplex kernel;
//! - [`stationary`] — the refined and conventional static problems and
//!   optimal stationary points;
//! - [`cec`] — finite look-ahead window versions of the deterministic
//!   control problem (used for MPC steering and as an upper-bound oracle);
//! - [`control`] — maximum alignment coefficient, align-and-steer rules,
//!   deterministic trajectories and truncated bias accumulation;
//! - [`policy`] — rounding of deterministic controls onto the `1/N` grid,
//!   producing feasible N-armed policies;
//! - [`sim`] — seeded Monte Carlo simulation of the stochastic bandit,
//!   transition-noise statistics and a tiny exact DP oracle;
//! - [`chain`] — chain-structure classification and reachability
//!   certificates for the optimal stationary state.

#![forbid(unsafe_code)]

pub mod cec;
pub mod chain;
pub mod control;
mod error;
#[cfg(test)]
pub(crate) mod fixtures;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod policy;
pub mod rngs;
pub mod sim;
pub mod stationary;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
