//! Link-level simulation of binary faster-than-Nyquist (FTN) signaling.
//!
//! The transmit pulse is re-expressed over a family of τT-orthonormal
//! root-raised-cosine pulses, which turns the channel into the white-noise
//! linear model `y = H a + w` with a tall Toeplitz ISI matrix `H`. On top of
//! that model the crate provides an exhaustive LLR oracle, a list sphere
//! decoder (LSD), a small recurrent network that predicts the LSD's initial
//! radius, a rate-1/2 convolutional code with a soft Viterbi decoder, and a
//! Monte-Carlo harness that ties everything together.
//!
//! Module map:
//!
//! - [`pulse`]: rRC pulses, the orthonormal-basis expansion and its
//!   operation region.
//! - [`link`]: ISI matrix, BPSK mapping and the AWGN observation.
//! - [`fec`]: convolutional code (7, [171 133]), interleaver, Viterbi.
//! - [`detector`]: exact and list-based LLRs, the list sphere decoder,
//!   radius strategies and flop accounting.
//! - [`radius_net`]: the radius-predicting RNN, its training and persistence.
//! - [`harness`]: experiment configuration and the batch experiments behind
//!   the `ftnsim` binary.

// `!(x > 0.0)` guards reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod error;
pub mod fec;
pub mod harness;
pub mod link;
pub mod pulse;
pub mod radius_net;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
