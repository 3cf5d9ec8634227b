//! Diagonal self-affine measures in the plane.
//!
//! The crate is organised bottom-up: [`symbolic`] holds words, sequences and
//! stopping times, [`affine`] the iterated function system itself, [`measures`]
//! entropy and transport, [`partitions`] the approximate-square filtration,
//! [`dynamics`] suspension flows, [`slices`] conditional measures on lines and
//! [`estimators`] the experiments built on top. [`bundle`] carries the named
//! oracle systems used by tests and the command line.

pub mod affine;
pub mod bundle;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod measures;
pub mod partitions;
pub mod rational;
pub mod slices;
pub mod symbolic;

pub use error::{Error, Result};
