//! Covert communication over binary-input channels in which the
//! transmitter hides a short codeword in one secretly chosen slot of a
//! long frame.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod adversary;
pub mod bounds;
pub mod cli;
pub mod codec;
pub mod info;
pub mod oracle;
pub mod parallel;
pub mod rng;

pub use error::{Error, Result};
