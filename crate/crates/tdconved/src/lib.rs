//! Temporal deformable convolutional encoder-decoder for sequence captioning.
//!
//! The pipeline: frame/clip feature sequences go through a stack of temporal
//! deformable convolutional blocks (learned fractional sampling offsets,
//! resolved by linear interpolation), captions are produced by a causal
//! convolutional decoder with temporal attention over the encoder states,
//! trained teacher-forced and decoded greedily or with beam search.
//!
//! Everything is built on a small double-precision numeric core with explicit
//! backward companions per operation, verified against central finite
//! differences. No external tensor or autograd library is used.

pub mod attention;
pub mod cli;
pub mod config;
pub mod data;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numcore;
pub mod tdconv;

pub use error::{Error, Result};
