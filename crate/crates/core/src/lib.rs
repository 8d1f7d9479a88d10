//! Probabilistic consumer-choice model of firm competition.
//!
//! Consumers pick one of the offered products with a probability that grows
//! with quality and falls with price, then buy it with an acceptance
//! probability of the same shape. On top of this the crate provides closed
//! forms for the monopolist and symmetric Nash optima ([`analytic`]), a
//! numerical best-response equilibrium solver ([`solver`]), the competition
//! scenarios built on it ([`scenarios`]) and a Monte Carlo consumer simulator ([`montecarlo`]).

// `!(x > 0.0)` deliberately rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod optimize;
pub mod scenarios;
pub mod solver;
pub mod validation;

pub use error::{ModelError, SolverError};
pub use model::{ConsumerPopulation, Firm, Market, Offer};
