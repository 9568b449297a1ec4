//! Hybrid classical-quantum dynamics with events.
//!
//! A quantum system is coupled to a classical system with discrete states
//! (labels). The ensemble obeys a linear master equation for one density
//! block per label ([`master`]); individual systems follow a piecewise
//! deterministic jump process whose average reproduces it ([`pdp`]).
//! On top of that sit the worked models: position detectors
//! ([`detector`]), a proper-time Dirac detector ([`dirac`]) and the
//! four-polarizer spin iterated function system ([`ifs`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxcount;
pub mod csv;
pub mod detector;
pub mod dirac;
pub mod error;
pub mod experiments;
pub mod hybrid;
pub mod ifs;
pub mod linalg;
pub mod master;
pub mod par;
pub mod pdp;
pub mod quad;
pub mod render;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use hybrid::{
    Coupling, CouplingEntry, CouplingFamily, Grid1D, HilbertSpace, HybridDensityState, HybridModel, HybridPureState,
    Label,
};
pub use linalg::{CMatrix, CVector, Operator, TimeDependent, C64};
pub use master::{evolve_density, liouville_rhs, MasterRunConfig, TimeGrid};
pub use par::Execution;
