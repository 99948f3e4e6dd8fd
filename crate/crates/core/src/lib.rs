//! Curriculum teaching engine: a key-value memory traces a student's
//! knowledge over latent concepts and a deterministic actor-critic agent
//! learns per-class mini-batch sampling proportions from that trace.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod ktrace;
pub mod numerics;
pub mod pooling;
pub mod student;

pub use error::{Error, Result};
