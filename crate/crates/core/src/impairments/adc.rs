//! Ideal AGC followed by a per-rail uniform quantizer.
//!
//! Rail voltage is `Re(x) * sqrt(2 R)` (and likewise for `Im`), so a complex
//! tone of power `P` puts a sine of peak `sqrt(2 R P)` on each rail.

use num_complex::Complex64;

use crate::config::TransceiverConfig;
use crate::error::{invalid, Error, Result};
use crate::signal::{db_to_lin, watts_to_dbm, ComplexSignal};

/// Mid-rise `bits`-bit quantizer per rail with clipping at `full_scale`
/// (rail amplitude in signal units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adc {
    pub bits: u32,
    pub full_scale: f64,
}

impl Adc {
    pub fn new(bits: u32, full_scale: f64) -> Result<Self> {
        if bits == 0 || bits > 52 {
            return Err(invalid("bits", "must be in 1..=52"));
        }
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return Err(invalid("full_scale", "must be finite and > 0"));
        }
        Ok(Self { bits, full_scale })
    }

    pub fn from_config(cfg: &TransceiverConfig) -> Result<Self> {
        let v_peak = cfg.adc_vpp / 2.0;
        Self::new(cfg.adc_bits, v_peak / (2.0 * cfg.adc_impedance_ohm).sqrt())
    }

    pub fn step(&self) -> f64 {
        2.0 * self.full_scale / 2f64.powi(self.bits as i32)
    }

    pub fn quantize_rail(&self, v: f64) -> f64 {
        let d = self.step();
        let top = self.full_scale - d / 2.0;
        ((v / d).floor() * d + d / 2.0).clamp(-top, top)
    }

    pub fn quantize(&self, s: &ComplexSignal) -> ComplexSignal {
        s.with_samples(
            s.samples()
                .iter()
                .map(|x| Complex64::new(self.quantize_rail(x.re), self.quantize_rail(x.im)))
                .collect(),
        )
    }

    /// Power (W) of the full-scale complex tone.
    pub fn full_scale_power(&self) -> f64 {
        self.full_scale * self.full_scale
    }
}

/// Full-scale-to-mean ratio of one rail, in dB.
pub fn rail_loading_db(s: &ComplexSignal, adc: &Adc) -> Result<f64> {
    let p = s.power()?;
    if p == 0.0 {
        return Err(Error::InvalidMeasurement("rail loading of an all-zero signal".into()));
    }
    Ok(10.0 * (adc.full_scale * adc.full_scale / (p / 2.0)).log10())
}

/// Scales `s` to the AGC target power and quantizes it. Returns the scaled
/// signal after quantization and the applied gain in dB.
pub fn agc_adc(s: &ComplexSignal, cfg: &TransceiverConfig) -> Result<(ComplexSignal, f64)> {
    let p = s.power()?;
    if p == 0.0 {
        return Err(Error::InvalidMeasurement("AGC on an all-zero signal".into()));
    }
    let gain_db = cfg.agc_target_dbm() - watts_to_dbm(p);
    Ok((adc_at_gain(s, cfg, gain_db)?, gain_db))
}

/// Applies a fixed gain, then quantizes (unless quantization is disabled).
pub fn adc_at_gain(s: &ComplexSignal, cfg: &TransceiverConfig, gain_db: f64) -> Result<ComplexSignal> {
    let scaled = s.scaled(db_to_lin(gain_db).sqrt());
    if !cfg.adc_quantization {
        return Ok(scaled);
    }
    Ok(Adc::from_config(cfg)?.quantize(&scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkbudget::adc_snr;
    use crate::signal::dbm_to_watts;
    use crate::signal::PowerDbm;
    use crate::waveform::ofdm_frame;

    #[test]
    fn quantizer_is_monotone_symmetric_and_clips() {
        let q = Adc::new(4, 1.0).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in -300..=300 {
            let v = i as f64 / 100.0;
            let y = q.quantize_rail(v);
            assert!(y >= last);
            last = y;
            if (v / q.step()).fract() != 0.0 {
                assert_eq!(q.quantize_rail(-v), -y);
            }
        }
        assert_eq!(q.quantize_rail(5.0), 1.0 - q.step() / 2.0);
        assert_eq!(q.quantize_rail(-5.0), -(1.0 - q.step() / 2.0));
    }

    #[test]
    fn table_full_scale_maps_to_2_25_v_rails() {
        let cfg = TransceiverConfig::default();
        let adc = Adc::from_config(&cfg).unwrap();
        assert!((adc.full_scale * (100f64).sqrt() - 2.25).abs() < 1e-12);
        assert!((watts_to_dbm(adc.full_scale_power()) - cfg.adc_full_scale_dbm()).abs() < 1e-12);
    }

    #[test]
    fn agc_hits_target_and_is_noop_at_target() {
        let cfg = TransceiverConfig::default();
        let x = ofdm_frame(&cfg.ofdm(), 20_000, 3).unwrap();
        let (y, g) = agc_adc(&x, &cfg).unwrap();
        assert!((watts_to_dbm(y.power().unwrap()) - cfg.agc_target_dbm()).abs() < 0.05);
        let at_target = x.scaled((dbm_to_watts(PowerDbm(cfg.agc_target_dbm())) / x.power().unwrap()).sqrt());
        let (_, g0) = agc_adc(&at_target, &cfg).unwrap();
        assert!(g0.abs() < 1e-9);
        assert!((g - (cfg.agc_target_dbm() - 30.0)).abs() < 0.05);
        assert!(agc_adc(&ComplexSignal::zeros(8, 1.0).unwrap(), &cfg).is_err());
    }

    #[test]
    fn quantization_noise_follows_snr_formula() {
        let cfg = TransceiverConfig::default();
        let adc = Adc::from_config(&cfg).unwrap();
        let x = ofdm_frame(&cfg.ofdm(), 200_000, 8).unwrap();
        let peak = x.samples().iter().map(|v| v.re.abs().max(v.im.abs())).fold(0.0, f64::max);
        let scaled = x.scaled(adc.full_scale * (1.0 - 1e-9) / peak);
        let q = adc.quantize(&scaled);
        let err = q.sub(&scaled).unwrap().power().unwrap();
        let snr = 10.0 * (scaled.power().unwrap() / err).log10();
        let loading = rail_loading_db(&scaled, &adc).unwrap();
        let want = adc_snr(cfg.adc_bits, loading);
        assert!((snr - want).abs() < 1.0, "{snr} vs {want}");
    }

    #[test]
    fn wide_quantizer_is_transparent() {
        let cfg = TransceiverConfig {
            adc_bits: 24,
            ..Default::default()
        };
        let x = ofdm_frame(&cfg.ofdm(), 20_000, 3).unwrap();
        let (y, g) = agc_adc(&x, &cfg).unwrap();
        let ideal = x.scaled(db_to_lin(g).sqrt());
        let err = y.sub(&ideal).unwrap().power().unwrap();
        let dbfs = 10.0 * (err / Adc::from_config(&cfg).unwrap().full_scale_power()).log10();
        assert!(dbfs < -130.0, "{dbfs}");
    }
}
