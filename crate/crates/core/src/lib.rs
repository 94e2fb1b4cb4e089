//! Membership inference by a dishonest federated-learning server.
//!
//! The server ships a parameter vector whose last layers hide a small ReLU
//! "trap": a subnetwork whose output, and therefore every gradient flowing
//! through it, is exactly zero unless the input's features land within an
//! ℓ1 ball of radius ε around a chosen target. After one round of client
//! training the server only has to look at how far the ε bias moved.
//!
//! This crate is `no_std` + `alloc`. File IO, CSV, the experiment harness
//! and the command line live in the `relutrap` companion crate.
//!
//! Module map:
//!
//! - [`nn`]: tensors, layers, forward/backward, cross-entropy, SGD and Adam.
//! - [`trap`]: parameter crafting and closed-form oracles for the trap.
//! - [`fedsim`]: FedAvg client training, aggregation, server rounds.
//! - [`attack`]: reference run, decision statistic, threshold test.
//! - [`data`]: samples, byte-level MNIST/CIFAR parsers, normalization,
//!   member/non-member draws, synthetic data and exact-duplicate scanning.
//! - [`metrics`]: FPR/FNR/accuracy and rank-based AUC.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod attack;
pub mod data;
mod error;
pub mod fedsim;
pub mod metrics;
pub mod nn;
pub mod seed;
pub mod trap;

pub use error::{Error, Result};
pub use nn::{
    Architecture, Label, LayerSpec, Network, ParameterVector, Real, Tensor,
};
