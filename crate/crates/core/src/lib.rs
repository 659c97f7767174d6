//! Simulator for MOSFET-based analog joint source-channel coding (AJSCC)
//! over a frequency-modulated Rician link, with receiver-side source
//! identification and quantization-step optimization.

pub mod channel;
pub mod decoder;
pub mod error;
pub mod experiments;
pub mod kde;
pub mod mosfet;
pub mod optimizer;
pub mod power;
pub mod rng;
pub mod source;

pub use error::{Error, Result};
