//! First-passage percolation on Cayley graphs of hyperbolic groups.
//!
//! The crate is organised bottom-up: [`group`] provides exact arithmetic and
//! the word metric, [`combing`] the geodesic automaton and its boundary
//! measure, [`environment`] the i.i.d. edge weights, [`metric`] passage
//! times, [`geometry`] coarse hyperbolic geometry, and [`experiments`] the
//! Monte Carlo drivers used by the `fpp` binary.

pub mod cli;
pub mod combing;
pub mod environment;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod group;
pub mod metric;

pub use error::{FppError, Result};
