//! Numerical core for a one-step hybrid Fredkin gate: a flux qutrit
//! dispersively coupled to two bosonic memories (resonators or NV ensembles).
//!
//! Everything here is `no_std` with `alloc`; IO, configuration and the
//! command line live in the `fredkin-sim` crate.

#![no_std]

extern crate alloc;

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod fredkin;
pub mod hilbert;
pub mod model;
pub mod nv;
pub mod sparse;

pub use error::{Error, Result};
pub use hilbert::{CMatrix, CVector, DensityOp, Ket, Level, LinOp, SpaceLayout, C64};
pub use model::{DerivedParams, PhysicalParams};
