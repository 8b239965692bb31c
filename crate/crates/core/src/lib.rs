//! Soft-output massive MIMO uplink detection with Gauss-Seidel iterations
//! started from a two-term Neumann series estimate.
//!
//! * [`numerics`]: dense complex matrices, the `D + L + L^H` split of a
//!   Hermitian matrix, Cholesky and triangular solves with optional
//!   multiplication counting.
//! * [`channel`]: i.i.d. and Kronecker-correlated Rayleigh channels, noise
//!   and the SNR convention.
//! * [`modem`]: Gray-labelled QAM and max-log bit metrics.
//! * [`coding`]: the rate-1/2 convolutional code, soft Viterbi decoding and
//!   the interleaver.
//! * [`detect`]: the detector family (IGS, plain GS, Neumann, exact MMSE) and
//!   the shared LLR stage.
//! * [`fxp`]: a bit-accurate fixed-point model of the IGS datapath.
//! * [`hwmodel`]: multiplication counts and the cycle-level latency model.
//! * [`harness`]: the Monte Carlo BER/FER engine, presets and output files.

pub mod channel;
pub mod coding;
pub mod detect;
pub mod error;
pub mod fxp;
pub mod harness;
pub mod hwmodel;
pub mod modem;
pub mod numerics;

pub use error::{Error, Result};
