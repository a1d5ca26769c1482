//! Pulse-level Monte-Carlo simulation of a Cirac–Zoller ion-trap quantum
//! computer factoring N = 15, with Gaussian phase drift errors on every laser
//! pulse and optional watchdog (quantum Zeno) stabilization.

pub mod circuit;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod noise;
pub mod pulse;
pub mod shor;
pub mod statevec;
pub mod watchdog;

pub use error::{Error, Result};
