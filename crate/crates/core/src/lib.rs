//! Driven, dissipative Jaynes–Cummings oscillator: master-equation
//! steady states and two-time correlations, the two-state analytic limit,
//! and wave-particle correlator trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hilbert;
pub mod cli;
pub mod io;
pub mod linalg;
pub mod liouville;
pub mod trajectories;
pub mod two_state;

pub use error::{Error, Result};
pub use hilbert::{Branch, SystemParams};
