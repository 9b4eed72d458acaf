//! Minimal dense linear algebra kernel.
//!
//! Everything here is a pure function over immutable inputs and safe to
//! call from any number of threads. Tensors are 32-bit floats; the SVD
//! path works in f64 internally.

mod ops;
mod svd;
mod tensor;

pub use ops::{dot, gelu, layer_norm, linear, masked_softmax, matmul, softmax};
pub use svd::{svd_factored, SvdResult};
pub use tensor::Tensor;
