//! Information Bottleneck analysis of translation encoders.
//!
//! Encoders are read from word-alignment tables, grounded in a meaning
//! space learned from similarity judgements, and compared with the IB
//! optimal frontier and with counterfactual baselines.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod encoder;
pub mod error;
pub mod frontier;
pub mod info;
pub mod meaning;
pub mod output;
pub mod pipeline;
pub mod similarity;

pub use error::{Error, Result};
