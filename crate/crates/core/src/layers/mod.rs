//! Layers with hand-derived backward passes.
//!
//! Every layer is a plain parameter container: `forward` returns the output
//! together with a cache, and `backward` consumes that cache plus the
//! upstream gradient.

mod activation;
mod conv;
mod dense;
mod dropout;
mod lstm;
mod pool;

pub use activation::{sigmoid, Activation};
pub use conv::{left_pad, Conv1DCache, Conv1DGrads, Conv1DLayer};
pub use dense::{DenseGrads, DenseLayer};
pub use dropout::{DropoutMask, DropoutSpec, Mode};
pub use lstm::{LstmCache, LstmCell, LstmGrads};
pub use pool::{maxpool1d, maxpool1d_backward, MaxPoolCache};
