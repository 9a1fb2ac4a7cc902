//! Deterministic f32 compute kernels.
//!
//! All kernels are stateless, pure, and accumulate in a fixed order, so the
//! same values produce bit-identical outputs no matter how the surrounding
//! code batches or streams them. Nothing here pads implicitly or runs in
//! parallel; both would break the streaming/offline equality the rest of the
//! crate asserts.

mod attention;
mod conv;
mod linalg;
mod tensor;

pub use attention::{full_attention, masked_softmax_attention, softmax_rows};
pub use conv::{conv1d, conv1d_transposed, ConvSpec};
pub use linalg::{layer_norm, leaky_relu, linear, map, matmul, relu, sigmoid};
pub use tensor::{BoolMatrix, Tensor};
