//! Data summarization by maximizing the exemplar-based clustering function.
//!
//! The crate is organized bottom-up:
//!
//! - [`data`] and [`distance`]: the ground matrix, evaluation multisets,
//!   precision modes and the dissimilarity used everywhere.
//! - [`ebc`]: the k-medoids loss, the set function and its reference
//!   evaluator.
//! - [`batched`]: work-matrix evaluation of many sets at once, threaded and
//!   as a deterministic device model.
//! - [`layout`]: the memory layouts the device model reads from and a
//!   transaction counter for them.
//! - [`optimize`]: Greedy, a threshold sieve and an exhaustive oracle.
//! - [`bench`]: problem generation and runtime sweeps.

pub mod batched;
pub mod bench;
pub mod data;
pub mod distance;
pub mod ebc;
pub mod error;
pub mod layout;
pub mod optimize;

pub use data::{AuxiliaryKind, EvalMultiset, GroundMatrix, MultisetBuilder, Precision, Summary};
pub use distance::{squared_euclidean, Dissimilarity, Scalar, SquaredEuclidean};
pub use ebc::EbcFunction;
pub use error::{Error, Result};
pub use optimize::{Backend, OptimizerBudget};
