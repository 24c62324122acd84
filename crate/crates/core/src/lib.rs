//! Reaction-coordinate mapping of structured reservoirs.
//!
//! The crate is `no_std` with `alloc`. It covers spectral densities and their
//! transforms, single-step and recursive mappings, the closed-form catalog,
//! small-Hilbert-space operators, a Born–Markov master equation, the exact
//! resonant-level transport solution and the thermal-machine analysis built on
//! top of those.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod catalog;
pub mod dynamics;
pub mod engines;
pub mod error;
pub mod exactset;
pub mod numeric;
pub mod quantum;
pub mod rcmap;
pub mod specdens;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;
