//! Numerical certification of locality estimates for quantum spin chains.

pub mod builtins;
pub mod chain;
pub mod config;
pub mod error;
pub mod fnorm;
pub mod linalg;
pub mod lrcert;
pub mod quad;
pub mod specflow;
pub mod splitlab;
pub mod stats;
pub mod tensor;
pub mod z2;

pub use error::{Error, Result};
