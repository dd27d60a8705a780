//! Relativistic tunnelling on a 1+1D lattice whose discrete lightcone is
//! exact.
//!
//! The scheme in [`dynamics`] transports the characteristic variables of
//! the Dirac equation by exactly one cell per step (`dt = dz`) and applies
//! the mass and potential as an exact local rotation. Because nothing moves
//! faster than one cell per step, causality statements about the continuum
//! equation become bitwise statements about the lattice, and [`causality`]
//! checks them as such.

// `!(a < b)` is how range checks here reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod causality;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod observables;
pub mod oracles;
pub mod state;

pub use causality::{CausalityReport, SupportInterval};
pub use dynamics::{evolve, History, Potential, SchemeConfig, Splitting};
pub use error::{Error, Result};
pub use grid::Grid1D;
pub use observables::{current, probability, CurrentField, Region};
pub use state::{PacketKind, PacketSpec, Side, SpinorField};
