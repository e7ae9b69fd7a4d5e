//! End-to-end transceiver: DAC to ADC, one self-interference path and an
//! optional signal of interest.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::config::TransceiverConfig;
use crate::error::{Error, Result};
use crate::impairments::adc::adc_at_gain;
use crate::impairments::channel::{draw_si_channel_with_decay, SiChannel};
use crate::impairments::iq::{apply_iq_imbalance, irr_to_response, WidelyLinearResponse};
use crate::impairments::pa::{apply_ph, filter_power_gain, pa_from_specs, PhModel};
use crate::impairments::rfcancel::{design_rf_canceller, ofdm_autocorrelation, RfCanceller};
use crate::impairments::stage::{apply_stage, StageSpec};
use crate::signal::{
    awgn, db_to_lin, dbm_to_watts, lin_to_db, stream_rng, watts_to_dbm, ComplexSignal, PowerDbm,
};
use crate::waveform::ofdm_frame;

/// Seeds for one pass. `hardware` fixes the channel and IQ image phases,
/// the rest fix the transmit data, the SOI data and every noise source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSet {
    pub hardware: u64,
    pub tx_data: u64,
    pub soi_data: u64,
    pub noise: u64,
}

impl SeedSet {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            hardware: split(seed, 1),
            tx_data: split(seed, 2),
            soi_data: split(seed, 3),
            noise: split(seed, 4),
        }
    }

    /// Same hardware, independent data and noise.
    pub fn fresh(&self, pass: u64) -> Self {
        Self {
            hardware: self.hardware,
            tx_data: split(self.tx_data, pass),
            soi_data: split(self.soi_data, pass),
            noise: split(self.noise, pass),
        }
    }
}

/// splitmix64 of `seed` mixed with `tag`
pub fn split(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Receiver gains chosen by the AGC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgcSetting {
    pub rx_vga_gain_db: f64,
    /// Digital correction after the VGA so the ADC input lands on target.
    pub residual_gain_db: f64,
}

impl AgcSetting {
    pub fn total_db(&self) -> f64 {
        self.rx_vga_gain_db + self.residual_gain_db
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgcMode {
    Auto,
    Fixed(AgcSetting),
}

/// Gains at which the chain ran.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub tx_vga_gain_db: f64,
    /// In-band linear gain of the PA.
    pub pa_gain_db: f64,
    /// RX VGA gain including the AGC's residual correction.
    pub rx_vga_gain_db: f64,
}

/// Mean powers (dBm) along the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub operating_point: OperatingPoint,
    pub agc: AgcSetting,
    pub dac_dbm: f64,
    pub pa_out_dbm: f64,
    pub si_at_lna_dbm: f64,
    pub rx_in_dbm: f64,
    pub after_rf_dbm: f64,
    /// SI power before over after the RF canceller, noise excluded.
    pub rf_suppression_db: f64,
    pub vm_gain_db: f64,
    pub lna_out_dbm: f64,
    pub vga_in_dbm: f64,
    pub adc_in_dbm: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Known digital transmit samples.
    pub x: ComplexSignal,
    pub y_adc: ComplexSignal,
    pub diagnostics: Diagnostics,
}

// noise source tags
const N_DAC: u64 = 10;
const N_TX_MIXER: u64 = 11;
const N_PA: u64 = 12;
const N_RX_INPUT: u64 = 13;
const N_VM: u64 = 14;
const N_LNA: u64 = 15;
const N_RX_MIXER: u64 = 16;
const N_RX_VGA: u64 = 17;

/// Hardware realization shared by every pass of a run.
#[derive(Debug, Clone)]
pub struct Transceiver {
    cfg: TransceiverConfig,
    pa: PhModel,
    pa_gain: f64,
    tx_iq: WidelyLinearResponse,
    rx_iq: WidelyLinearResponse,
    channel: SiChannel,
    rf: RfCanceller,
    noise_floor_w: f64,
    /// Unit-power OFDM frame after the TX IQ mixer, for solving the TX VGA gain.
    probe: ComplexSignal,
}

const PROBE_LEN: usize = 8192;
const PROBE_TAG: u64 = 0x9b;

impl Transceiver {
    pub fn new(cfg: &TransceiverConfig, hardware_seed: u64) -> Result<Self> {
        cfg.validate()?;
        let pa_full = pa_from_specs(cfg.pa_gain_db, cfg.pa_iip3_dbm, cfg.pa_order, &cfg.pa_design())?;
        let pa = if cfg.pa_nonlinearity { pa_full } else { pa_full.linearized() };
        let r = ofdm_autocorrelation(&cfg.ofdm(), pa.memory());
        let pa_gain = filter_power_gain(pa.branch(1).expect("linear branch"), &r);

        let mut rng = stream_rng(hardware_seed, 0x1a);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        // quadrature image phases so TX and RX images add in power
        let tx_iq = irr_to_response(cfg.tx_irr_db, phase)?;
        let rx_iq = irr_to_response(cfg.rx_irr_db, phase + FRAC_PI_2)?;

        let channel = draw_si_channel_with_decay(
            cfg.si_k_factor_db,
            cfg.antenna_separation_db,
            cfg.si_diffuse_taps,
            cfg.si_tap_decay_db,
            hardware_seed,
        )?;
        let noise_floor_w = cfg.sim_noise_floor_w();
        let rf = design_rf_canceller(&channel, cfg, noise_floor_w)?;
        let probe = apply_iq_imbalance(&ofdm_frame(&cfg.ofdm(), PROBE_LEN, split(hardware_seed, PROBE_TAG))?, &tx_iq);
        Ok(Self {
            cfg: cfg.clone(),
            pa,
            pa_gain,
            tx_iq,
            rx_iq,
            channel,
            rf,
            noise_floor_w,
            probe,
        })
    }

    pub fn config(&self) -> &TransceiverConfig {
        &self.cfg
    }

    pub fn pa(&self) -> &PhModel {
        &self.pa
    }

    pub fn tx_iq(&self) -> &WidelyLinearResponse {
        &self.tx_iq
    }

    pub fn rx_iq(&self) -> &WidelyLinearResponse {
        &self.rx_iq
    }

    pub fn channel(&self) -> &SiChannel {
        &self.channel
    }

    pub fn rf_canceller(&self) -> &RfCanceller {
        &self.rf
    }

    pub fn pa_gain_db(&self) -> f64 {
        lin_to_db(self.pa_gain)
    }

    /// TX VGA gain that puts `tx_power_dbm` at the PA output, PA compression
    /// included. Starts from the small-signal gain and corrects on a probe frame.
    pub fn tx_vga_gain_db(&self, tx_power_dbm: f64) -> Result<f64> {
        let c = &self.cfg;
        let dac_w = dbm_to_watts(PowerDbm(c.dac_power_dbm));
        let drive_db = c.tx_mixer_gain_db + lin_to_db(self.probe.power()?);
        let mut g = tx_power_dbm - c.dac_power_dbm - drive_db - self.pa_gain_db();
        if !self.pa.is_linear() {
            for _ in 0..20 {
                let amp = (dac_w * db_to_lin(c.tx_mixer_gain_db + g)).sqrt();
                let out = apply_ph(&self.probe.scaled(amp), &self.pa);
                let err = tx_power_dbm - watts_to_dbm(out.power()?);
                g += err;
                if err.abs() < 1e-6 || !g.is_finite() || g > c.tx_vga_max_db + 10.0 {
                    break;
                }
            }
        }
        if !(c.tx_vga_min_db..=c.tx_vga_max_db).contains(&g) {
            return Err(Error::GainOutOfRange {
                stage: "tx_vga",
                gain_db: g,
                min_db: c.tx_vga_min_db,
                max_db: c.tx_vga_max_db,
            });
        }
        Ok(g)
    }

    /// Runs one pass over the digital transmit samples `x` (unit power).
    pub fn run(
        &self,
        x: &ComplexSignal,
        soi: Option<&ComplexSignal>,
        tx_power_dbm: f64,
        noise_seed: u64,
        agc: AgcMode,
    ) -> Result<ChainOutput> {
        let c = &self.cfg;
        let p = self.noise_floor_w;
        let fs = x.sample_rate();
        let n = x.len();
        let seed = |tag| split(noise_seed, tag);
        let g_tx = self.tx_vga_gain_db(tx_power_dbm)?;

        // transmitter
        let mut dac = x.scaled(dbm_to_watts(PowerDbm(c.dac_power_dbm)).sqrt());
        dac.add_assign(&awgn(n, p, fs, seed(N_DAC))?)?;
        let mixed = apply_iq_imbalance(&dac, &self.tx_iq);
        let mixed = apply_stage(&mixed, &StageSpec::linear(c.tx_mixer_gain_db, c.tx_mixer_nf_db), p, seed(N_TX_MIXER))?;
        let vga = mixed.scaled(db_to_lin(g_tx).sqrt());
        let mut pa_out = apply_ph(&vga, &self.pa);
        let pa_noise = (db_to_lin(c.pa_nf_db) - 1.0) * self.pa_gain * p;
        pa_out.add_assign(&awgn(n, pa_noise, fs, seed(N_PA))?)?;

        // air and RF cancellation
        let si = self.channel.apply(&pa_out);
        let mut rx_in = si.clone();
        if let Some(s) = soi {
            rx_in.add_assign(&s.scaled(dbm_to_watts(PowerDbm(c.soi_power_dbm)).sqrt()))?;
        }
        let antenna_share = 1.0 - self.channel.total_gain().min(1.0);
        rx_in.add_assign(&awgn(n, antenna_share * p, fs, seed(N_RX_INPUT))?)?;
        let after_rf = self.rf.apply(&rx_in, &pa_out, seed(N_VM))?;
        let si_residual = ComplexSignal::new(
            crate::signal::convolve_causal(&self.rf.residual_taps(&self.channel), pa_out.samples()),
            fs,
        )?;

        // receiver
        let lna = apply_stage(&after_rf, &c.lna(), p, seed(N_LNA))?;
        let rxm = apply_iq_imbalance(&lna, &self.rx_iq);
        let rxm = apply_stage(&rxm, &c.rx_mixer(), p, seed(N_RX_MIXER))?;
        let target = c.agc_target_dbm();
        let vga_in_dbm = watts_to_dbm(rxm.power()?);
        let rx_vga_gain_db = match agc {
            AgcMode::Auto => target - vga_in_dbm,
            AgcMode::Fixed(s) => s.rx_vga_gain_db,
        };
        if !(c.rx_vga_min_db..=c.rx_vga_max_db).contains(&rx_vga_gain_db) {
            return Err(Error::GainOutOfRange {
                stage: "rx_vga",
                gain_db: rx_vga_gain_db,
                min_db: c.rx_vga_min_db,
                max_db: c.rx_vga_max_db,
            });
        }
        let vga_out = apply_stage(&rxm, &c.rx_vga(rx_vga_gain_db), p, seed(N_RX_VGA))?;
        let residual_gain_db = match agc {
            AgcMode::Auto => target - watts_to_dbm(vga_out.power()?),
            AgcMode::Fixed(s) => s.residual_gain_db,
        };
        let agc_setting = AgcSetting {
            rx_vga_gain_db,
            residual_gain_db,
        };
        let y_adc = adc_at_gain(&vga_out, c, residual_gain_db)?;

        let dbm = |s: &ComplexSignal| s.power().map(watts_to_dbm);
        let si_p = si.power()?;
        let diagnostics = Diagnostics {
            operating_point: OperatingPoint {
                tx_vga_gain_db: g_tx,
                pa_gain_db: self.pa_gain_db(),
                rx_vga_gain_db: agc_setting.total_db(),
            },
            agc: agc_setting,
            dac_dbm: dbm(&dac)?,
            pa_out_dbm: dbm(&pa_out)?,
            si_at_lna_dbm: watts_to_dbm(si_p),
            rx_in_dbm: dbm(&rx_in)?,
            after_rf_dbm: dbm(&after_rf)?,
            rf_suppression_db: if si_p > 0.0 {
                lin_to_db(si_p / si_residual.power()?)
            } else {
                0.0
            },
            vm_gain_db: self.rf.vm_gain_db,
            lna_out_dbm: dbm(&lna)?,
            vga_in_dbm,
            adc_in_dbm: watts_to_dbm(vga_out.power()?) + residual_gain_db,
        };
        Ok(ChainOutput {
            x: x.clone(),
            y_adc,
            diagnostics,
        })
    }

    /// Generates transmit and SOI frames from `seeds` and runs one pass.
    pub fn run_seeded(
        &self,
        soi_on: bool,
        tx_power_dbm: f64,
        len: usize,
        seeds: &SeedSet,
        agc: AgcMode,
    ) -> Result<ChainOutput> {
        let ofdm = self.cfg.ofdm();
        let x = ofdm_frame(&ofdm, len, seeds.tx_data)?;
        let soi = if soi_on {
            Some(ofdm_frame(&ofdm, len, seeds.soi_data)?)
        } else {
            None
        };
        self.run(&x, soi.as_ref(), tx_power_dbm, seeds.noise, agc)
    }
}

/// One evaluation-length pass with automatic gain control.
pub fn full_chain(soi_on: bool, tx_power_dbm: f64, cfg: &TransceiverConfig, seeds: &SeedSet) -> Result<ChainOutput> {
    Transceiver::new(cfg, seeds.hardware)?.run_seeded(soi_on, tx_power_dbm, cfg.evaluation_samples, seeds, AgcMode::Auto)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tx_vga_range_is_enforced() {
        let cfg = TransceiverConfig::default();
        let t = Transceiver::new(&cfg, 1).unwrap();
        assert!(t.tx_vga_gain_db(0.0).is_ok());
        assert!(t.tx_vga_gain_db(25.0).is_ok());
        match t.tx_vga_gain_db(40.0) {
            Err(Error::GainOutOfRange { stage, .. }) => assert_eq!(stage, "tx_vga"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pa_output_hits_requested_power() {
        let cfg = TransceiverConfig {
            pa_nonlinearity: false,
            ..Default::default()
        };
        let seeds = SeedSet::from_seed(5);
        let out = full_chain(false, 15.0, &cfg, &seeds).unwrap();
        assert!((out.diagnostics.pa_out_dbm - 15.0).abs() < 0.1, "{}", out.diagnostics.pa_out_dbm);
        assert!((out.diagnostics.adc_in_dbm - cfg.agc_target_dbm()).abs() < 1e-9);
    }

    #[test]
    fn rf_suppression_is_configured_depth() {
        let cfg = TransceiverConfig::default();
        for s in 0..3 {
            let out = full_chain(false, 20.0, &cfg, &SeedSet::from_seed(s)).unwrap();
            assert!((out.diagnostics.rf_suppression_db - 30.0).abs() < 1.0, "{}", out.diagnostics.rf_suppression_db);
        }
    }

    #[test]
    fn twin_passes_are_bit_identical() {
        let cfg = TransceiverConfig::default();
        let seeds = SeedSet::from_seed(9);
        let a = full_chain(true, 10.0, &cfg, &seeds).unwrap();
        let b = full_chain(true, 10.0, &cfg, &seeds).unwrap();
        assert_eq!(a.y_adc, b.y_adc);
        let c = full_chain(true, 10.0, &cfg, &seeds.fresh(1)).unwrap();
        assert_ne!(a.y_adc, c.y_adc);
    }

    #[test]
    fn fixed_agc_reproduces_auto() {
        let cfg = TransceiverConfig::default();
        let seeds = SeedSet::from_seed(2);
        let t = Transceiver::new(&cfg, seeds.hardware).unwrap();
        let a = t.run_seeded(false, 12.5, 5000, &seeds, AgcMode::Auto).unwrap();
        let b = t
            .run_seeded(false, 12.5, 5000, &seeds, AgcMode::Fixed(a.diagnostics.agc))
            .unwrap();
        assert_eq!(a.y_adc, b.y_adc);
    }
}
