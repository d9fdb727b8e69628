//! Position-based contributive embeddings (PosCE) for aspect sentiment
//! classification.
//!
//! The crate is organised bottom-up:
//!
//! * [`shapley`]: cooperative-game engine (exact enumeration, permutation
//!   sampling, axiom checks).
//! * [`textmodel`]: embeddings, positional encodings, the PosCE lift and the
//!   tanh/mean-pool/softmax classifier with analytic gradients.
//! * [`posce`]: per-sentence word-position games and the per-aspect-position
//!   contribution table.
//! * [`corpus`]: dataset records, tokenization and the synthetic generator.
//! * [`harness`]: training with PosCE rebuild schedules, metrics and the
//!   schedule comparison experiment.
//! * [`cli`]: the `posce` command line front end.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod container;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod posce;
pub mod shapley;
pub mod textmodel;

pub use error::{Error, ErrorClass, Result};
