//! Simulation of cooperative multiplexing in a half-duplex relay network: a
//! one-antenna source, a two-antenna relay and a two-antenna destination.
//!
//! The crate computes outage events for successive relaying (joint decoding
//! and distributed D-BLAST with MMSE-SIC), a two-slot space-time coding
//! protocol, direct transmission and a 2×2 MIMO reference; estimates outage
//! and relay-constraint probabilities by Monte Carlo; and exports the
//! analytic diversity-multiplexing tradeoff curves.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod dblast;
pub mod dmt_analytic;
pub mod error;
pub mod experiments;
pub mod matrix;
pub mod mimo_info;
pub mod stats;

pub use error::{Error, Result};
