//! ensnet: a desk-scale deep-network toolkit.
//!
//! The crate covers the full path from an architecture written in a compact
//! composition notation to a trained weighted ensemble of networks:
//!
//! * [`arch`] — parse descriptions like
//!   `I(227,227,3)->C(11,4,96)->L->P(2,3)->F(4096)->F(e)`, expand inception
//!   and residual blocks into a primitive-layer graph, infer every feature
//!   shape, and count parameters.
//! * [`tensor`] / [`ops`] — f64 tensors with forward and backward passes for
//!   conv, pooling, dense, ReLU, LRN, batch norm, and softmax, a momentum
//!   SGD step, and finite-difference gradient checking.
//! * [`net`] — preset architectures (three full classifiers and three tiny
//!   32x32 analogues), network instantiation, fine-tuning head replacement,
//!   the training loop, and score extraction.
//! * [`fusion`] — weighted concatenation of per-network score vectors, the
//!   ensemble head (ReLU -> dense -> softmax), its training, and simplex
//!   grid search for the per-network weights.
//! * [`image`] — HSV intensity-only histogram equalization, bilinear
//!   resizing, flip/crop jitter, PPM ingestion, directory datasets,
//!   deterministic train/test splits, and a synthetic dataset generator.
//! * [`eval`] — top-k accuracy, rank-vs-accuracy curves, and a binary score
//!   cache for decoupling extraction from evaluation.
//!
//! Every stochastic step is seeded, and the serialized formats are
//! byte-stable, so runs reproduce bit for bit. The `ensnet` binary exposes
//! each stage as a subcommand; the crate examples walk through the same
//! pipeline as library calls.

// kernels use indexed loops on purpose: summation order is part of the
// reproducibility contract
#![allow(clippy::needless_range_loop)]

pub mod arch;
pub mod checkpoint;
pub mod cli;
pub mod eval;
pub mod fusion;
pub mod image;
pub mod jsonfmt;
pub mod net;
pub mod ops;
pub mod rng;
pub mod tensor;

pub use tensor::Tensor;
