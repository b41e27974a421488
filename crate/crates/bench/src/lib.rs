//! Fixtures shared by the benchmarks.

use gda_core::dataset::synth_gaussian_classes;
use gda_core::{DenseTensor, LabeledTensorSet, Matrix};

/// Deterministic dense tensor with entries in `[-1, 1)`.
pub fn patterned_tensor(shape: &[usize]) -> DenseTensor {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    DenseTensor::from_fn(shape, |_| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    })
    .expect("valid shape")
}

pub fn patterned_matrix(rows: usize, cols: usize) -> Matrix {
    patterned_tensor(&[rows, cols]).into_matrix().expect("order 2")
}

/// Face-sized recognition set: `classes × 10` samples of `shape`.
pub fn recognition_set(classes: usize, shape: &[usize]) -> LabeledTensorSet {
    synth_gaussian_classes(classes, 10, shape, 2.0, 1.0, 1).expect("valid spec")
}
