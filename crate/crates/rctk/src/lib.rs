//! File formats, parallel sweep drivers and the command-line front end of
//! the reaction-coordinate toolkit. The numerics live in `rctk-core`.

// `!(x >= y)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cmd;
pub mod error;
pub mod io;
pub mod par;

pub use error::{CliError, Result};
