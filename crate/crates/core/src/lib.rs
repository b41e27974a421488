//! Multilinear discriminant subspace learning.
//!
//! Samples are dense N-way tensors. Training reduces each mode with a
//! high-order SVD of the stacked training set, then alternates per-mode
//! discriminant eigen-solves on the resulting cores. New samples are
//! projected with the combined per-mode projectors and labeled by their
//! nearest projected training sample.

pub mod compress;
pub mod data;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod gda;
pub mod hosvd;
pub mod linalg;
pub mod model_io;
pub mod tensor;

pub use data::LabeledTensorSet;
pub use error::{Error, ErrorClass, Result};
pub use eval::{ExperimentReport, Plane, Prediction};
pub use gda::{GdaModel, Method, TrainingConfig};
pub use hosvd::{HosvdResult, RankPolicy};
pub use tensor::{kronecker, DenseTensor, Matrix};
