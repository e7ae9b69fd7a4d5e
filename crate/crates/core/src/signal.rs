//! Complex baseband containers, power units and seeded noise.
//!
//! Power convention: a sample sequence `x` carries `mean(|x|^2)` watts. No
//! reference impedance is threaded through the chain; the ADC is the only
//! place where volts appear.
//!
//! All randomness comes from ChaCha8 keyed by a 64-bit seed. Independent noise
//! sources inside one run use distinct ChaCha stream ids under the same key, so
//! two runs with the same seed reproduce every noise source bit for bit.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};

/// Thermal noise density at room temperature.
pub const NOISE_DENSITY_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid("sample_rate", format!("must be > 0, got {sample_rate}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate)
    }

    /// Builds a signal sharing this signal's sample rate.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn power(&self) -> Result<f64> {
        measure_power(self)
    }

    pub fn scaled(&self, gain: f64) -> Self {
        self.with_samples(self.samples.iter().map(|&s| s * gain).collect())
    }

    pub fn conj(&self) -> Self {
        self.with_samples(self.samples.iter().map(|s| s.conj()).collect())
    }

    pub fn slice(&self, start: usize, end: usize) -> Self {
        self.with_samples(self.samples[start..end].to_vec())
    }

    pub fn add(&self, other: &ComplexSignal) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &ComplexSignal) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn add_assign(&mut self, other: &ComplexSignal) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += b;
        }
        Ok(())
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Power in dB relative to one milliwatt.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerDbm(pub f64);

impl PowerDbm {
    pub fn to_watts(self) -> f64 {
        dbm_to_watts(self)
    }

    pub fn from_watts(w: f64) -> Self {
        PowerDbm(watts_to_dbm(w))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn dbm_to_watts(p: PowerDbm) -> f64 {
    10f64.powf((p.0 - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn measure_power(s: &ComplexSignal) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidMeasurement("power of an empty signal".into()));
    }
    Ok(s.samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / s.len() as f64)
}

/// Thermal noise floor `-174 dBm/Hz + 10 log10(B)`.
pub fn thermal_floor_power(bandwidth_hz: f64) -> Result<PowerDbm> {
    if !(bandwidth_hz > 0.0) {
        return Err(invalid("bandwidth", format!("must be > 0, got {bandwidth_hz}")));
    }
    Ok(PowerDbm(NOISE_DENSITY_DBM_HZ + 10.0 * bandwidth_hz.log10()))
}

/// Seeded generator for one named noise source.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric complex Gaussian noise of the given total power.
pub fn awgn(len: usize, power: f64, sample_rate: f64, seed: u64) -> Result<ComplexSignal> {
    awgn_stream(len, power, sample_rate, seed, 0)
}

pub fn awgn_stream(
    len: usize,
    power: f64,
    sample_rate: f64,
    seed: u64,
    stream: u64,
) -> Result<ComplexSignal> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(invalid("power", format!("noise power must be >= 0, got {power}")));
    }
    if power == 0.0 {
        return ComplexSignal::zeros(len, sample_rate);
    }
    let mut rng = stream_rng(seed, stream);
    let sigma = (power / 2.0).sqrt();
    let samples = (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * sigma, im * sigma)
        })
        .collect();
    ComplexSignal::new(samples, sample_rate)
}

/// Forward DFT of the whole signal (unnormalized).
pub fn spectrum(s: &ComplexSignal) -> Vec<Complex64> {
    let mut buf = s.samples.clone();
    if buf.is_empty() {
        return buf;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Frequency in Hz of DFT bin `k` of an `n`-point transform.
pub fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k < n_f / 2.0 {
        k * sample_rate / n_f
    } else {
        (k - n_f) * sample_rate / n_f
    }
}

/// Mean power carried by the spectral content inside `|f| <= bandwidth/2`.
pub fn inband_power(s: &ComplexSignal, bandwidth_hz: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidMeasurement("in-band power of an empty signal".into()));
    }
    let n = s.len();
    let spec = spectrum(s);
    let half = bandwidth_hz / 2.0;
    let sum: f64 = spec
        .iter()
        .enumerate()
        .filter(|(k, _)| bin_frequency(*k, n, s.sample_rate).abs() <= half)
        .map(|(_, x)| x.norm_sqr())
        .sum();
    Ok(sum / (n as f64 * n as f64))
}

/// Causal FIR filtering truncated to the input length.
pub fn convolve_causal(taps: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for (n, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, t) in taps.iter().enumerate().take(n + 1) {
            acc += t * x[n - k];
        }
        *o = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FS: f64 = 64e6;

    #[test]
    fn dbm_examples() {
        assert!((dbm_to_watts(PowerDbm(30.0)) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(PowerDbm(0.0)) - 1e-3).abs() < 1e-18);
        let w = dbm_to_watts(PowerDbm(-103.03));
        assert!((w / 4.977e-14 - 1.0).abs() < 1e-3, "{w}");
    }

    #[test]
    fn power_examples() {
        let z = ComplexSignal::zeros(100, FS).unwrap();
        assert_eq!(measure_power(&z).unwrap(), 0.0);
        let ones = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 37], FS).unwrap();
        assert_eq!(measure_power(&ones).unwrap(), 1.0);
        let circle = ComplexSignal::new(
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, -1.0),
            ],
            FS,
        )
        .unwrap();
        assert_eq!(measure_power(&circle).unwrap(), 1.0);
        let empty = ComplexSignal::zeros(0, FS).unwrap();
        assert!(matches!(measure_power(&empty), Err(Error::InvalidMeasurement(_))));
    }

    #[test]
    fn rejects_bad_sample_rate() {
        assert!(ComplexSignal::new(vec![], 0.0).is_err());
        assert!(ComplexSignal::new(vec![], f64::NAN).is_err());
    }

    #[test]
    fn awgn_edge_cases() {
        assert!(awgn(0, 1.0, FS, 1).unwrap().is_empty());
        let z = awgn(64, 0.0, FS, 1).unwrap();
        assert!(z.samples().iter().all(|s| s.norm() == 0.0));
        assert!(awgn(4, -1.0, FS, 1).is_err());
    }

    #[test]
    fn awgn_power_and_mean() {
        let n = 1_000_000;
        let s = awgn(n, 1e-3, FS, 42).unwrap();
        let p = s.power().unwrap();
        assert!((p / 1e-3 - 1.0).abs() < 0.01, "{p}");
        let mean: Complex64 = s.samples().iter().sum::<Complex64>() / n as f64;
        // 3 sigma of the sample mean per rail
        let bound = 3.0 * (1e-3f64 / 2.0 / n as f64).sqrt();
        assert!(mean.re.abs() < bound && mean.im.abs() < bound, "{mean}");
    }

    #[test]
    fn awgn_is_deterministic_and_streams_differ() {
        let a = awgn_stream(256, 1.0, FS, 7, 3).unwrap();
        let b = awgn_stream(256, 1.0, FS, 7, 3).unwrap();
        let c = awgn_stream(256, 1.0, FS, 7, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn thermal_floor_examples() {
        assert_eq!(thermal_floor_power(1.0).unwrap().0, -174.0);
        let p = thermal_floor_power(12.5e6).unwrap().0;
        assert!((p - (-103.03)).abs() < 0.005, "{p}");
        assert!((p + 4.1 + 10.0 - (-88.9)).abs() < 0.1);
        assert!((thermal_floor_power(1e6).unwrap().0 + 114.0).abs() < 1e-12);
        assert!(thermal_floor_power(0.0).is_err());
    }

    #[test]
    fn inband_power_of_white_noise_scales_with_bandwidth() {
        let s = awgn(1 << 16, 1.0, FS, 5).unwrap();
        let frac = inband_power(&s, 16e6).unwrap() / s.power().unwrap();
        assert!((frac - 0.25).abs() < 0.01, "{frac}");
    }

    #[test]
    fn convolution_matches_definition() {
        let taps = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)];
        let x = [
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(3.0, 0.0),
        ];
        let y = convolve_causal(&taps, &x);
        assert_eq!(y[0], Complex64::new(1.0, 0.0));
        assert_eq!(y[1], Complex64::new(2.0, 0.5));
        assert_eq!(y[2], Complex64::new(3.0, 1.0));
    }

    proptest! {
        #[test]
        fn dbm_round_trip(p in -200.0f64..50.0) {
            let back = watts_to_dbm(dbm_to_watts(PowerDbm(p)));
            prop_assert!((back - p).abs() < 1e-9);
        }
    }
}
