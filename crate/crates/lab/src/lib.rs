//! File formats, parallel runners and the command-line front end for
//! `spinelab-core`.
//!
//! Outputs are CSV or JSON tables meant for external plotting. Run
//! configuration is TOML, robot descriptions and policy checkpoints are
//! JSON.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod robot;
pub mod table;

pub use error::{LabError, Result};
