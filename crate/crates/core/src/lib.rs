//! Financial risk forecasting with a hybrid convolutional/LSTM regressor.
//!
//! The crate covers the whole pipeline: seeded tensors and hand-differentiated
//! layers, feature engineering over market, financial, sentiment and policy
//! series, training with Adam and early stopping, a linear baseline, and the
//! evaluation metrics used to compare the two.

pub mod data_io;
pub mod error;
pub mod eval;
pub mod features;
pub mod layers;
pub mod models;
pub mod pipeline;
pub mod tensor;
pub mod training;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use tensor::{SeededRng, Tensor};
