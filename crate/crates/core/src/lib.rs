//! Streaming accent-conversion inference runtime.
//!
//! A chunked audio stream runs through a segment-attention content encoder,
//! a dilated-convolution bottleneck and an upsampling vocoder, driven by a
//! scheduler that buffers a fixed warm-up, extracts a speaker embedding
//! once, and then emits audio chunk by chunk. Every stage
//! has an offline (whole-utterance) reference and a cached streaming form,
//! and the two are bit-identical by construction; the test suites assert it.

pub mod bottleneck;
pub mod config;
pub mod emformer;
pub mod error;
pub mod features;
pub mod kernels;
pub mod pipeline;
pub mod stream;
pub mod vocoder;
pub mod weights;

pub use error::{Error, Result};
