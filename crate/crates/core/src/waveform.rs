//! CP-OFDM transmit waveform with Gray-mapped 16-QAM data bins.
//!
//! Symbols are synthesized with a zero-padded inverse FFT of length
//! `n_subcarriers * oversampling`, so oversampling adds no images. Data bins
//! sit symmetrically around DC (DC and band edges unused, no pilots).

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::signal::{stream_rng, ComplexSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Qam16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmParams {
    pub n_subcarriers: usize,
    pub n_data_subcarriers: usize,
    pub guard_samples: usize,
    pub oversampling: usize,
    pub constellation: Constellation,
    pub n_symbols: usize,
    /// Native (non-oversampled) sample rate.
    pub chip_rate_hz: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            n_subcarriers: 64,
            n_data_subcarriers: 48,
            guard_samples: 16,
            oversampling: 4,
            constellation: Constellation::Qam16,
            n_symbols: 1,
            chip_rate_hz: 16e6,
        }
    }
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers < 2 {
            return Err(invalid("n_subcarriers", "need at least 2 subcarriers"));
        }
        if self.n_data_subcarriers == 0 || self.n_data_subcarriers > self.n_subcarriers - 1 {
            return Err(invalid(
                "n_data_subcarriers",
                format!(
                    "{} data bins do not fit in {} subcarriers with DC excluded",
                    self.n_data_subcarriers, self.n_subcarriers
                ),
            ));
        }
        if self.guard_samples >= self.n_subcarriers {
            return Err(invalid("guard_samples", "guard must be shorter than the symbol"));
        }
        if self.oversampling == 0 {
            return Err(invalid("oversampling", "must be >= 1"));
        }
        if !(self.chip_rate_hz > 0.0) {
            return Err(invalid("chip_rate_hz", "must be > 0"));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.chip_rate_hz * self.oversampling as f64
    }

    pub fn fft_len(&self) -> usize {
        self.n_subcarriers * self.oversampling
    }

    pub fn symbol_len(&self) -> usize {
        (self.n_subcarriers + self.guard_samples) * self.oversampling
    }

    pub fn prefix_len(&self) -> usize {
        self.guard_samples * self.oversampling
    }

    /// Signed bin indices carrying data, ordered negative to positive.
    pub fn occupied_bins(&self) -> Vec<i64> {
        let neg = (self.n_data_subcarriers / 2) as i64;
        let pos = self.n_data_subcarriers as i64 - neg;
        (-neg..0).chain(1..=pos).collect()
    }

    /// Two-sided width of the occupied data band.
    pub fn occupied_bandwidth_hz(&self) -> f64 {
        let spacing = self.chip_rate_hz / self.n_subcarriers as f64;
        let bins = self.occupied_bins();
        let lo = *bins.first().unwrap() as f64;
        let hi = *bins.last().unwrap() as f64;
        (hi - lo + 1.0) * spacing
    }

    /// Number of symbols needed to cover `samples` output samples.
    pub fn symbols_for(&self, samples: usize) -> usize {
        samples.div_ceil(self.symbol_len())
    }
}

fn qam16_level(bits: u32) -> f64 {
    // Gray order along one axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    match bits & 0b11 {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        _ => 3.0,
    }
}

pub fn qam16_symbol(index: u32) -> Complex64 {
    let scale = 1.0 / 10f64.sqrt();
    Complex64::new(qam16_level(index >> 2) * scale, qam16_level(index) * scale)
}

/// Generates `n_symbols` CP-OFDM symbols normalized to exactly 1 W mean power.
pub fn generate_ofdm(params: &OfdmParams, seed: u64) -> Result<ComplexSignal> {
    params.validate()?;
    let fs = params.sample_rate();
    if params.n_symbols == 0 {
        return ComplexSignal::zeros(0, fs);
    }
    let nfft = params.fft_len();
    let cp = params.prefix_len();
    let bins = params.occupied_bins();
    let ifft = FftPlanner::new().plan_fft_inverse(nfft);
    let mut rng = stream_rng(seed, 0x0fd3);

    let mut out = Vec::with_capacity(params.n_symbols * params.symbol_len());
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for _ in 0..params.n_symbols {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for &b in &bins {
            let idx = if b >= 0 { b as usize } else { (nfft as i64 + b) as usize };
            buf[idx] = match params.constellation {
                Constellation::Qam16 => qam16_symbol(rng.random_range(0..16)),
            };
        }
        ifft.process(&mut buf);
        out.extend_from_slice(&buf[nfft - cp..]);
        out.extend_from_slice(&buf);
    }
    let p = out.iter().map(|s| s.norm_sqr()).sum::<f64>() / out.len() as f64;
    let g = 1.0 / p.sqrt();
    out.iter_mut().for_each(|s| *s *= g);
    ComplexSignal::new(out, fs)
}

/// OFDM frame of exactly `len` samples (trailing partial symbol truncated).
pub fn ofdm_frame(params: &OfdmParams, len: usize, seed: u64) -> Result<ComplexSignal> {
    let p = OfdmParams {
        n_symbols: params.symbols_for(len),
        ..params.clone()
    };
    let s = generate_ofdm(&p, seed)?;
    Ok(s.slice(0, len.min(s.len())))
}

/// Peak-to-average power ratio in dB.
pub fn papr(s: &ComplexSignal) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidMeasurement("PAPR of an empty signal".into()));
    }
    let peak = s.samples().iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    let mean = s.power()?;
    if mean == 0.0 {
        return Err(Error::InvalidMeasurement("PAPR of an all-zero signal".into()));
    }
    Ok(10.0 * (peak / mean).log10())
}
