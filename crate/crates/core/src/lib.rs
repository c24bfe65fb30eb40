//! Paraphrase-weighted question answering.
//!
//! A question is rewritten by pluggable paraphrase generators, each rewrite is
//! scored by a BiLSTM paraphrase model, and the answer distribution of a QA
//! back-end is marginalized over the normalized paraphrase weights. Both models
//! are trained jointly from question/answer pairs.

pub mod error;
pub mod scalar;
pub mod textkit;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub mod metrics;
pub mod paragen;
pub mod tensornet;
pub mod scorer;
pub mod qamodels;
pub mod e2e;
pub mod cli;
pub mod synthetic;

pub type Tensor64 = tensornet::Tensor<f64>;
pub type ParamStore64 = tensornet::ParamStore<f64>;
pub type Model64 = e2e::Model<f64>;
pub type Tensor32 = tensornet::Tensor<f32>;
pub type ParamStore32 = tensornet::ParamStore<f32>;
pub type Model32 = e2e::Model<f32>;

#[cfg(test)]
mod testutil;
