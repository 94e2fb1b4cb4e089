//! Std companion to `relutrap-core`: dataset files, the experiment harness
//! and the `relutrap` command line.

pub mod cli;
pub mod error;
pub mod harness;
pub mod io;

pub use error::{LabError, Result};
