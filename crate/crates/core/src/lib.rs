pub mod blocks;
pub mod dynamics;
pub mod envelope;
pub mod error;
pub mod exp_sum;
pub mod linear;
pub mod modal;
pub mod spectrum;
pub mod trace;

pub use error::{Error, Result};
pub use trace::SignalTrace;
