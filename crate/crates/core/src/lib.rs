//! Asymmetric adaptive LDPC-based information reconciliation for QKD
//! post-processing.
//!
//! The crate is organised bottom-up:
//!
//! * [`ldpc`] builds and stores sparse parity-check matrices (PEG
//!   construction, untainted puncturing sets, the rate pool and its cache).
//! * [`decoder`] runs variable-scaled Min-Sum syndrome decoding.
//! * [`adapt`] estimates the a-priori QBER, selects `{R, p, s}` and computes
//!   per-round disclosure counts for all four reconciliation schemes.
//! * [`session`] holds the Alice and Bob state machines that reconcile one
//!   frame (or a block of frames) over a [`transport::Link`].
//! * [`transport`] is the framed wire protocol and its TCP/in-memory links.
//! * [`simchannel`] generates correlated sifted-key pairs and decoy strings
//!   from the decoy-state BB84 model.
//! * [`metrics`] turns frame records into efficiency, FER and secret key
//!   figures, and writes the CSV reports.
//! * [`experiment`] runs simulated points: blocks of frames, both parties
//!   in one process, with out-of-band key comparison.
//! * [`config`] is the declarative run configuration.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod bits;
pub mod config;
pub mod decoder;
pub mod entropy;
mod error;
pub mod experiment;
pub mod ldpc;
pub mod metrics;
pub mod session;
pub mod simchannel;
pub mod transport;

pub use error::{Error, Result};
