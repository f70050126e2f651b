//! Bertrand price competition between computation sellers (SUs) and a single
//! offloading buyer (DU).
//!
//! The buyer splits part of its task across nearby sellers, each of which
//! posts a price per Mb. [`game`] holds the utilities and closed-form best
//! responses, [`solver`] iterates them to an equilibrium, [`selection`] picks
//! the sellers worth trading with and [`harness`] runs experiments and writes
//! result tables.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod game;
pub mod harness;
pub mod scenario;
pub mod selection;
pub mod solver;

pub use energy::{DeviceId, DeviceParams, Position, SuBaseline, SystemParams};
pub use error::{Constraint, Error, ErrorCategory, Result};
pub use game::{GameCoefficients, StrategyProfile, UtilityReport};
pub use scenario::{ActiveSet, Scenario};
pub use selection::{select_sus, SelectionOutcome};
pub use solver::{solve, solve_cig, solve_icig, EquilibriumResult, SolverConfig, SolverMode};
