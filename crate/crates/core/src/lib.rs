//! Design and verification toolkit for concatenated LDPC / staircase FEC.
//!
//! The inner code is an LDPC code whose ensemble may leave a fraction of the
//! bits uncoded (degree zero) and attach others to a single check (degree
//! one). The outer staircase code is modelled only by its rate and its
//! input bit-error threshold. The crate covers:
//!
//! - [`channel`]: Gray-QPSK / AWGN conventions, LLR generation and the
//!   binary-input constrained capacity used for gap reporting.
//! - [`ensemble`]: degree-distribution algebra and complexity scores.
//! - [`exit`]: Monte-Carlo elementary EXIT charts and the iteration functional.
//! - [`optimizer`]: complexity-minimizing ensemble search and Pareto sweeps.
//! - [`codegen`]: random and quasi-cyclic parity-check construction.
//! - [`decoder`]: sum-product / offset-min-sum decoding and BER simulation.
//! - [`concat`]: rate composition, diagonal interleaving, threshold adjudication.

pub mod channel;
pub mod codegen;
pub mod concat;
pub mod decoder;
pub mod ensemble;
pub mod error;
pub mod exit;
pub mod llr;
pub mod optimizer;
pub mod rng;

pub use error::{Error, Result};
