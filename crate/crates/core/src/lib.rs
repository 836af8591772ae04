//! Locomotion-control kernels for a quadruped with a three-axis active spine.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every computation the
//! laboratory performs: robot description, velocity-command curriculum,
//! reward terms, gait analysis, planar and free-fall dynamics, a small PPO
//! trainer and the evaluation protocols. File formats, CLI and thread-level
//! parallelism live in the `spinelab` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod curriculum;
pub mod error;
pub mod eval;
pub mod gait;
pub mod model;
pub mod policy;
pub mod reward;
pub mod sim;

pub use error::{Diverged, Error, Result};
