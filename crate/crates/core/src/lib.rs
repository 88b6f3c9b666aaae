//! Simulation and verification kernels for branching Brownian motion with
//! absorption, its genealogy, and the associated limit objects.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod coalescent;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fkpp;
pub mod flows;
pub mod genealogy;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
