//! Baseband simulator of a full-duplex transceiver with digital
//! self-interference cancellers and an analytic power-budget calculator.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cancellers;
pub mod cli;
pub mod config;
pub mod error;
pub mod impairments;
pub mod linalg;
pub mod linkbudget;
pub mod metrics;
pub mod signal;
pub mod waveform;

pub use error::{Error, Result};
