//! Dense row-major matrices, stable softmax and the crate-wide seeded generator.

mod matrix;
mod prob;
mod rng;
mod softmax;

pub use matrix::Matrix;
pub use prob::ProbMatrix;
pub use rng::Rng;
pub use softmax::{log_sum_exp, softmax, softmax_rows};
