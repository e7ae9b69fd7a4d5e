//! Analog front-end impairments, from DAC output to ADC output.

pub mod adc;
pub mod chain;
pub mod channel;
pub mod iq;
pub mod pa;
pub mod rfcancel;
pub mod stage;

pub use adc::{agc_adc, Adc};
pub use chain::{full_chain, AgcMode, AgcSetting, ChainOutput, Diagnostics, OperatingPoint, SeedSet, Transceiver};
pub use channel::{draw_si_channel, SiChannel};
pub use iq::{apply_iq_imbalance, irr_to_response, WidelyLinearResponse};
pub use pa::{apply_ph, pa_from_specs, two_tone_test, PhModel};
pub use rfcancel::rf_cancellation;
pub use stage::{apply_stage, StageSpec};
