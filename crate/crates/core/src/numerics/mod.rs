//! Dense real and complex kernels shared by the rest of the crate.

pub mod complex;
pub mod conv;
pub mod real;
pub mod rng;

pub use complex::{cplx_matmul, ComplexMatrix};
pub use conv::{conv2d_same, ConvWeights, Tensor3};
pub use real::{layer_norm, linear, matmul, softmax, softmax_global, RealMatrix};
pub use rng::{child_seed, SimRng};
pub use num_complex::Complex64;
