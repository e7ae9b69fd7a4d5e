//! Transceiver configuration: flat `key = value` text, one key per line.
//!
//! Every key has a default. Component defaults are the baseline full-duplex
//! parameter set; the remaining keys fix simulator conventions. `inf` is
//! accepted for quantities where infinity means "ideal" or "absent".

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::impairments::pa::PaDesign;
use crate::impairments::stage::StageSpec;
use crate::signal::{thermal_floor_power, watts_to_dbm};
use crate::waveform::{Constellation, OfdmParams};

#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverConfig {
    // system level
    pub snr_requirement_db: f64,
    pub bandwidth_hz: f64,
    pub receiver_noise_figure_db: f64,
    pub sensitivity_dbm: f64,
    pub soi_power_dbm: f64,
    pub antenna_separation_db: f64,
    pub rf_cancellation_db: f64,
    pub vm_attenuation_before_db: f64,
    pub vm_attenuation_after_db: f64,
    pub tx_irr_db: f64,
    pub rx_irr_db: f64,
    pub adc_bits: u32,
    pub adc_vpp: f64,
    pub papr_db: f64,

    // components
    pub tx_mixer_gain_db: f64,
    pub tx_mixer_nf_db: f64,
    pub tx_vga_min_db: f64,
    pub tx_vga_max_db: f64,
    pub pa_gain_db: f64,
    pub pa_iip3_dbm: f64,
    pub pa_nf_db: f64,
    pub vm_gain_db: f64,
    pub vm_nf_db: f64,
    pub lna_gain_db: f64,
    pub lna_iip2_dbm: f64,
    pub lna_iip3_dbm: f64,
    pub lna_nf_db: f64,
    pub rx_mixer_gain_db: f64,
    pub rx_mixer_iip2_dbm: f64,
    pub rx_mixer_iip3_dbm: f64,
    pub rx_mixer_nf_db: f64,
    pub rx_vga_min_db: f64,
    pub rx_vga_max_db: f64,
    pub rx_vga_iip2_dbm: f64,
    pub rx_vga_iip3_dbm: f64,
    pub rx_vga_nf_db: f64,

    // waveform
    pub ofdm_subcarriers: usize,
    pub ofdm_data_subcarriers: usize,
    pub ofdm_guard_samples: usize,
    pub ofdm_oversampling: usize,
    pub ofdm_chip_rate_hz: f64,

    // simulator conventions
    pub si_k_factor_db: f64,
    pub si_diffuse_taps: usize,
    pub si_tap_decay_db: f64,
    pub dac_power_dbm: f64,
    pub adc_impedance_ohm: f64,
    pub pa_order: usize,
    pub pa_fifth_below_third_db: f64,
    pub canceller_memory: usize,
    pub canceller_order: usize,
    pub calibration_samples: usize,
    pub evaluation_samples: usize,
    pub linear_dc_residual_below_floor_db: f64,
    pub thermal_noise: bool,
    pub pa_nonlinearity: bool,
    pub rx_nonlinearity: bool,
    pub adc_quantization: bool,
}

impl Default for TransceiverConfig {
    fn default() -> Self {
        Self {
            snr_requirement_db: 10.0,
            bandwidth_hz: 12.5e6,
            receiver_noise_figure_db: 4.1,
            sensitivity_dbm: -88.9,
            soi_power_dbm: -83.9,
            antenna_separation_db: 40.0,
            rf_cancellation_db: 30.0,
            vm_attenuation_before_db: 15.0,
            vm_attenuation_after_db: 15.0,
            tx_irr_db: 30.0,
            rx_irr_db: 30.0,
            adc_bits: 12,
            adc_vpp: 4.5,
            papr_db: 10.0,

            tx_mixer_gain_db: 6.0,
            tx_mixer_nf_db: 10.0,
            tx_vga_min_db: 0.0,
            tx_vga_max_db: 30.0,
            pa_gain_db: 27.0,
            pa_iip3_dbm: 13.0,
            pa_nf_db: 5.0,
            vm_gain_db: -10.0,
            vm_nf_db: 20.0,
            lna_gain_db: 25.0,
            lna_iip2_dbm: 43.0,
            lna_iip3_dbm: -9.0,
            lna_nf_db: 4.1,
            rx_mixer_gain_db: 6.0,
            rx_mixer_iip2_dbm: 42.0,
            rx_mixer_iip3_dbm: 15.0,
            rx_mixer_nf_db: 4.0,
            rx_vga_min_db: 0.0,
            rx_vga_max_db: 69.0,
            rx_vga_iip2_dbm: 43.0,
            rx_vga_iip3_dbm: 14.0,
            rx_vga_nf_db: 4.0,

            ofdm_subcarriers: 64,
            ofdm_data_subcarriers: 48,
            ofdm_guard_samples: 16,
            ofdm_oversampling: 4,
            ofdm_chip_rate_hz: 16e6,

            si_k_factor_db: 35.8,
            si_diffuse_taps: 7,
            si_tap_decay_db: 3.0,
            dac_power_dbm: -33.0,
            adc_impedance_ohm: 50.0,
            pa_order: 5,
            pa_fifth_below_third_db: 25.0,
            canceller_memory: 10,
            canceller_order: 5,
            calibration_samples: 10_000,
            evaluation_samples: 20_000,
            linear_dc_residual_below_floor_db: 3.0,
            thermal_noise: true,
            pa_nonlinearity: true,
            rx_nonlinearity: true,
            adc_quantization: true,
        }
    }
}

enum Slot<'a> {
    F(&'a mut f64),
    U(&'a mut usize),
    B32(&'a mut u32),
    Bool(&'a mut bool),
}

macro_rules! keys {
    ($m:ident, $cfg:ident) => {
        $m!($cfg,
            F snr_requirement_db, F bandwidth_hz, F receiver_noise_figure_db, F sensitivity_dbm,
            F soi_power_dbm, F antenna_separation_db, F rf_cancellation_db,
            F vm_attenuation_before_db, F vm_attenuation_after_db, F tx_irr_db, F rx_irr_db,
            B32 adc_bits, F adc_vpp, F papr_db,
            F tx_mixer_gain_db, F tx_mixer_nf_db, F tx_vga_min_db, F tx_vga_max_db,
            F pa_gain_db, F pa_iip3_dbm, F pa_nf_db, F vm_gain_db, F vm_nf_db,
            F lna_gain_db, F lna_iip2_dbm, F lna_iip3_dbm, F lna_nf_db,
            F rx_mixer_gain_db, F rx_mixer_iip2_dbm, F rx_mixer_iip3_dbm, F rx_mixer_nf_db,
            F rx_vga_min_db, F rx_vga_max_db, F rx_vga_iip2_dbm, F rx_vga_iip3_dbm, F rx_vga_nf_db,
            U ofdm_subcarriers, U ofdm_data_subcarriers, U ofdm_guard_samples, U ofdm_oversampling,
            F ofdm_chip_rate_hz,
            F si_k_factor_db, U si_diffuse_taps, F si_tap_decay_db, F dac_power_dbm,
            F adc_impedance_ohm, U pa_order, F pa_fifth_below_third_db,
            U canceller_memory, U canceller_order, U calibration_samples, U evaluation_samples,
            F linear_dc_residual_below_floor_db,
            Bool thermal_noise, Bool pa_nonlinearity, Bool rx_nonlinearity, Bool adc_quantization)
    };
}

macro_rules! slots {
    ($cfg:ident, $($t:ident $name:ident),* $(,)?) => {
        vec![$((stringify!($name), Slot::$t(&mut $cfg.$name))),*]
    };
}

/// One named check from [`TransceiverConfig::checks`].
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl TransceiverConfig {
    /// All key names, in file order.
    pub fn keys() -> Vec<&'static str> {
        let mut c = Self::default();
        let s = keys!(slots, c);
        s.into_iter().map(|(k, _)| k).collect()
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let cfg = self;
        let slots = keys!(slots, cfg);
        let (_, slot) = slots
            .into_iter()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| format!("unknown key `{key}`"))?;
        match slot {
            Slot::F(v) => *v = parse_f64(value)?,
            Slot::U(v) => *v = value.parse().map_err(|_| format!("`{value}` is not a count"))?,
            Slot::B32(v) => *v = value.parse().map_err(|_| format!("`{value}` is not a count"))?,
            Slot::Bool(v) => {
                *v = match value {
                    "true" | "on" | "yes" => true,
                    "false" | "off" | "no" => false,
                    _ => return Err(format!("`{value}` is not a boolean")),
                }
            }
        }
        Ok(())
    }

    /// Parses config text over the defaults. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                reason: "expected `key = value`".into(),
            })?;
            cfg.set(k.trim(), v.trim())
                .map_err(|reason| Error::Parse { line: i + 1, reason })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Renders every key; parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let mut c = self.clone();
        let mut out = String::from("# fdsim transceiver configuration\n");
        for (k, slot) in keys!(slots, c) {
            let v = match slot {
                Slot::F(v) => fmt_f64(*v),
                Slot::U(v) => v.to_string(),
                Slot::B32(v) => v.to_string(),
                Slot::Bool(v) => v.to_string(),
            };
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Structural checks that make a run impossible.
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| Err(crate::error::invalid(name, reason));
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth_hz", "must be > 0");
        }
        if self.adc_bits == 0 || self.adc_bits > 32 {
            return bad("adc_bits", "must be in 1..=32");
        }
        if !(self.adc_vpp > 0.0 && self.adc_impedance_ohm > 0.0) {
            return bad("adc_vpp", "voltage range and impedance must be > 0");
        }
        if self.tx_vga_min_db > self.tx_vga_max_db || self.rx_vga_min_db > self.rx_vga_max_db {
            return bad("vga_range", "minimum gain above maximum");
        }
        for (name, nf) in [
            ("tx_mixer_nf_db", self.tx_mixer_nf_db),
            ("pa_nf_db", self.pa_nf_db),
            ("vm_nf_db", self.vm_nf_db),
            ("lna_nf_db", self.lna_nf_db),
            ("rx_mixer_nf_db", self.rx_mixer_nf_db),
            ("rx_vga_nf_db", self.rx_vga_nf_db),
        ] {
            if !(nf.is_finite() && nf >= 0.0) {
                return bad(name, "noise figure must be finite and >= 0 dB");
            }
        }
        if self.pa_order < 3 || self.pa_order.is_multiple_of(2) {
            return bad("pa_order", "must be odd and >= 3");
        }
        if self.canceller_order.is_multiple_of(2) {
            return bad("canceller_order", "must be odd");
        }
        if self.canceller_memory == 0 {
            return bad("canceller_memory", "must be >= 1");
        }
        if self.calibration_samples <= self.canceller_memory || self.evaluation_samples <= self.canceller_memory {
            return bad("calibration_samples", "frames must be longer than the canceller memory");
        }
        if self.antenna_separation_db.is_nan() || self.rf_cancellation_db.is_nan() {
            return bad("antenna_separation_db", "must not be NaN");
        }
        self.ofdm().validate()
    }

    /// Consistency checks run by `validate` mode.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        let floor = thermal_floor_power(self.bandwidth_hz).map(|p| p.0).unwrap_or(f64::NAN);
        let sens = floor + self.receiver_noise_figure_db + self.snr_requirement_db;
        out.push(Check {
            name: "sensitivity",
            passed: (sens - self.sensitivity_dbm).abs() <= 0.1,
            detail: format!(
                "floor {floor:.2} dBm + NF {} dB + SNR {} dB = {sens:.2} dBm vs {} dBm",
                self.receiver_noise_figure_db, self.snr_requirement_db, self.sensitivity_dbm
            ),
        });
        let tx_ok = self.tx_vga_min_db >= 0.0 && self.tx_vga_max_db <= 30.0 && self.tx_vga_min_db <= self.tx_vga_max_db;
        out.push(Check {
            name: "tx_vga_range",
            passed: tx_ok,
            detail: format!("{}..{} dB within 0..30 dB", self.tx_vga_min_db, self.tx_vga_max_db),
        });
        let rx_ok = self.rx_vga_min_db >= 0.0 && self.rx_vga_max_db <= 69.0 && self.rx_vga_min_db <= self.rx_vga_max_db;
        out.push(Check {
            name: "rx_vga_range",
            passed: rx_ok,
            detail: format!("{}..{} dB within 0..69 dB", self.rx_vga_min_db, self.rx_vga_max_db),
        });
        let nf = 10.0 * crate::impairments::stage::cascade_noise_factor(&self.receiver_stages_at(self.rx_vga_max_db)).log10();
        out.push(Check {
            name: "receiver_cascade_nf",
            passed: (nf - self.receiver_noise_figure_db).abs() <= 0.3,
            detail: format!("Friis cascade {nf:.2} dB vs {} dB", self.receiver_noise_figure_db),
        });
        let structural = self.validate();
        out.push(Check {
            name: "structure",
            passed: structural.is_ok(),
            detail: structural.err().map(|e| e.to_string()).unwrap_or_else(|| "ok".into()),
        });
        out
    }

    pub fn ofdm(&self) -> OfdmParams {
        OfdmParams {
            n_subcarriers: self.ofdm_subcarriers,
            n_data_subcarriers: self.ofdm_data_subcarriers,
            guard_samples: self.ofdm_guard_samples,
            oversampling: self.ofdm_oversampling,
            constellation: Constellation::Qam16,
            n_symbols: 1,
            chip_rate_hz: self.ofdm_chip_rate_hz,
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.ofdm().sample_rate()
    }

    /// Thermal floor power in the signal bandwidth (W).
    pub fn thermal_floor_w(&self) -> f64 {
        thermal_floor_power(self.bandwidth_hz).map(|p| p.to_watts()).unwrap_or(0.0)
    }

    /// Thermal floor over the full simulation bandwidth, or 0 with noise disabled.
    pub fn sim_noise_floor_w(&self) -> f64 {
        if !self.thermal_noise {
            return 0.0;
        }
        thermal_floor_power(self.sample_rate()).map(|p| p.to_watts()).unwrap_or(0.0)
    }

    pub fn pa_design(&self) -> PaDesign {
        PaDesign {
            fifth_below_third_db: self.pa_fifth_below_third_db,
            ..PaDesign::default()
        }
    }

    fn nl(&self, db: f64) -> Option<f64> {
        if self.rx_nonlinearity && db.is_finite() {
            Some(db)
        } else {
            None
        }
    }

    pub fn lna(&self) -> StageSpec {
        StageSpec {
            gain_db: self.lna_gain_db,
            noise_figure_db: self.lna_nf_db,
            iip2_dbm: self.nl(self.lna_iip2_dbm),
            iip3_dbm: self.nl(self.lna_iip3_dbm),
        }
    }

    pub fn rx_mixer(&self) -> StageSpec {
        StageSpec {
            gain_db: self.rx_mixer_gain_db,
            noise_figure_db: self.rx_mixer_nf_db,
            iip2_dbm: self.nl(self.rx_mixer_iip2_dbm),
            iip3_dbm: self.nl(self.rx_mixer_iip3_dbm),
        }
    }

    pub fn rx_vga(&self, gain_db: f64) -> StageSpec {
        StageSpec {
            gain_db,
            noise_figure_db: self.rx_vga_nf_db,
            iip2_dbm: self.nl(self.rx_vga_iip2_dbm),
            iip3_dbm: self.nl(self.rx_vga_iip3_dbm),
        }
    }

    pub fn receiver_stages_at(&self, rx_vga_gain_db: f64) -> [StageSpec; 3] {
        [self.lna(), self.rx_mixer(), self.rx_vga(rx_vga_gain_db)]
    }

    /// Power of a full-scale complex tone whose rails peak at `adc_vpp / 2`.
    pub fn adc_full_scale_dbm(&self) -> f64 {
        let v = self.adc_vpp / 2.0;
        watts_to_dbm(v * v / (2.0 * self.adc_impedance_ohm))
    }

    /// Mean ADC input power the AGC aims for.
    pub fn agc_target_dbm(&self) -> f64 {
        self.adc_full_scale_dbm() - self.papr_db
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| format!("`{s}` is not a number")),
    }
}

fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}
