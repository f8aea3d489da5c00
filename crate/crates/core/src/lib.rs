//! Chunk-based subcarrier assignment and power allocation for downlink OFDMA
//! under proportional-rate constraints, with a 19-cell fractional frequency
//! reuse extension and a seeded Monte-Carlo harness.

pub mod assignment;
pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod multicell;
pub mod power;
pub mod rng;

pub use error::{Error, Result};
