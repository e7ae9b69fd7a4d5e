//! Analog RF cancellation through attenuator, vector modulator and combiner.
//!
//! The VM weight is a complex multiple of the LOS tap, solved in closed form so
//! the mean residual SI power, for the OFDM transmit spectrum, sits exactly the
//! configured cancellation depth below the SI.

use num_complex::Complex64;

use crate::config::TransceiverConfig;
use crate::error::{Error, Result};
use crate::impairments::channel::SiChannel;
use crate::impairments::pa::filter_power_gain;
use crate::signal::{awgn_stream, check_len, db_to_lin, ComplexSignal};
use crate::waveform::OfdmParams;

const VM_NOISE_STREAM: u64 = 0x7e01;

/// Normalized autocorrelation `R(k)` (lags `0..=max_lag`) of the OFDM waveform's
/// occupied spectrum.
pub fn ofdm_autocorrelation(params: &OfdmParams, max_lag: usize) -> Vec<Complex64> {
    let bins = params.occupied_bins();
    let l = params.fft_len() as f64;
    let nd = bins.len() as f64;
    (0..=max_lag)
        .map(|k| {
            bins.iter()
                .map(|&b| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * b as f64 * k as f64 / l))
                .sum::<Complex64>()
                / nd
        })
        .collect()
}

/// Fixed RF canceller for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RfCanceller {
    /// End-to-end weight `a1 * w_vm * a2` applied to the PA output.
    pub weight: Complex64,
    /// `|w_vm|^2` in dB that realizes `weight`.
    pub vm_gain_db: f64,
    /// Noise power injected at the combiner (W).
    pub noise_power_w: f64,
}

impl RfCanceller {
    /// No cancellation path at all.
    pub fn disconnected() -> Self {
        Self {
            weight: Complex64::new(0.0, 0.0),
            vm_gain_db: f64::NEG_INFINITY,
            noise_power_w: 0.0,
        }
    }

    /// Residual channel `h - weight * delta`.
    pub fn residual_taps(&self, channel: &SiChannel) -> Vec<Complex64> {
        let mut r = channel.taps().to_vec();
        r[0] -= self.weight;
        r
    }

    pub fn is_connected(&self) -> bool {
        self.weight.norm() > 0.0 || self.noise_power_w > 0.0
    }

    /// `rx_in - (weight * pa_out + combiner noise)`.
    pub fn apply(&self, rx_in: &ComplexSignal, pa_out: &ComplexSignal, seed: u64) -> Result<ComplexSignal> {
        check_len(rx_in.len(), pa_out.len())?;
        let noise = awgn_stream(rx_in.len(), self.noise_power_w, rx_in.sample_rate(), seed, VM_NOISE_STREAM)?;
        let out = rx_in
            .samples()
            .iter()
            .zip(pa_out.samples())
            .zip(noise.samples())
            .map(|((r, p), n)| r - (self.weight * p + n))
            .collect();
        Ok(rx_in.with_samples(out))
    }
}

/// Complex scale `alpha` on the LOS tap such that the mean residual power
/// through `h - alpha * h0 * delta` equals `10^(-depth/10)` times the SI power,
/// for a signal with autocorrelation `r`. `alpha` lies on the segment towards
/// the power-optimal scale and the root nearest zero is taken.
pub fn solve_los_scale(channel: &SiChannel, r: &[Complex64], depth_db: f64) -> Result<Complex64> {
    let h = channel.taps();
    let p = |alpha: Complex64| {
        let mut t = h.to_vec();
        t[0] -= alpha * h[0];
        filter_power_gain(&t, r)
    };
    let a = p(Complex64::new(0.0, 0.0));
    let c = h[0].norm_sqr() * r[0].re;
    // P(alpha) = a - 2 Re(conj(alpha) beta) + |alpha|^2 c
    let beta = Complex64::new(
        0.5 * (a + c - p(Complex64::new(1.0, 0.0))),
        0.5 * (a + c - p(Complex64::new(0.0, 1.0))),
    );
    let target = a * db_to_lin(-depth_db);
    let gain = if c > 0.0 { beta.norm_sqr() / c } else { 0.0 };
    if gain <= 0.0 || a - gain > target {
        return Err(Error::OutOfModel(format!(
            "RF cancellation of {depth_db} dB is not reachable with a LOS-matched weight; best is {:.2} dB",
            10.0 * (a / (a - gain)).log10()
        )));
    }
    let x = ((a - target) / gain).min(1.0);
    Ok(beta / c * (1.0 - (1.0 - x).sqrt()))
}

/// Builds the RF canceller for `channel` from the configured path parameters.
/// `noise_floor_w` is the thermal floor over the simulation bandwidth.
pub fn design_rf_canceller(channel: &SiChannel, cfg: &TransceiverConfig, noise_floor_w: f64) -> Result<RfCanceller> {
    if channel.is_disconnected() {
        return Ok(RfCanceller::disconnected());
    }
    let r = ofdm_autocorrelation(&cfg.ofdm(), channel.taps().len());
    let alpha = solve_los_scale(channel, &r, cfg.rf_cancellation_db)?;
    let weight = channel.los() * alpha;
    let a1 = db_to_lin(-cfg.vm_attenuation_before_db);
    let a2 = db_to_lin(-cfg.vm_attenuation_after_db);
    let vm_gain_db = 10.0 * (weight.norm_sqr() / (a1 * a2)).log10();
    let bracket = db_to_lin(cfg.vm_gain_db) * db_to_lin(cfg.vm_nf_db) - 1.0;
    if bracket < 0.0 {
        return Err(Error::OutOfModel(format!(
            "VM gain {} dB with NF {} dB gives negative combiner noise",
            cfg.vm_gain_db, cfg.vm_nf_db
        )));
    }
    Ok(RfCanceller {
        weight,
        vm_gain_db,
        noise_power_w: a2 * bracket * noise_floor_w,
    })
}

/// Designs the canceller for `channel` and applies it.
pub fn rf_cancellation(
    rx_in: &ComplexSignal,
    pa_out: &ComplexSignal,
    channel: &SiChannel,
    cfg: &TransceiverConfig,
    seed: u64,
) -> Result<ComplexSignal> {
    check_len(rx_in.len(), pa_out.len())?;
    design_rf_canceller(channel, cfg, cfg.sim_noise_floor_w())?.apply(rx_in, pa_out, seed)
}
