//! Two-timescale network slicing for vehicular edge-cloud networks.

pub mod baseline;
pub mod cost;
pub mod ddpg;
pub mod domain;
pub mod mdp;
pub mod error;
pub mod harness;
pub mod operation;
pub mod rng;
pub mod traffic;

pub use error::{Error, Result};
