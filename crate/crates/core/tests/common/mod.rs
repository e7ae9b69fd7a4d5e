//! Oracles and measurement helpers shared by the integration targets.
#![allow(dead_code)]

use fdsim::config::TransceiverConfig;
use fdsim::impairments::chain::{AgcMode, OperatingPoint, SeedSet, Transceiver};
use fdsim::signal::inband_power;

fn lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Config with every nonlinearity and the quantizer turned off.
pub fn linear_config(separation_db: f64, rf_db: f64) -> TransceiverConfig {
    TransceiverConfig {
        antenna_separation_db: separation_db,
        rf_cancellation_db: rf_db,
        // keeps the VM weight near unity magnitude for the coupling level
        vm_gain_db: -separation_db + 30.0,
        pa_nonlinearity: false,
        rx_nonlinearity: false,
        adc_quantization: false,
        ..TransceiverConfig::default()
    }
}

/// Detector noise at `tx` measured as the difference between a run with all
/// thermal sources and the same run without them, AGC frozen. Returns the
/// in-band noise (W) and the operating point of the noisy run.
pub fn measured_detector_noise(cfg: &TransceiverConfig, tx: f64, seed: u64) -> (f64, OperatingPoint) {
    let seeds = SeedSet::from_seed(seed);
    let on = Transceiver::new(cfg, seeds.hardware).unwrap();
    let quiet_cfg = TransceiverConfig {
        thermal_noise: false,
        ..cfg.clone()
    };
    let off = Transceiver::new(&quiet_cfg, seeds.hardware).unwrap();
    let n = cfg.evaluation_samples;
    let a = on.run_seeded(false, tx, n, &seeds, AgcMode::Auto).unwrap();
    let b = off.run_seeded(false, tx, n, &seeds, AgcMode::Fixed(a.diagnostics.agc)).unwrap();
    let noise = a.y_adc.sub(&b.y_adc).unwrap();
    (inband_power(&noise, cfg.bandwidth_hz).unwrap(), a.diagnostics.operating_point)
}

/// Detector thermal noise (W) written out directly from the configured dB
/// values: receiver cascade by Friis, then the RX, VM, antenna and TX terms.
pub fn hand_noise(cfg: &TransceiverConfig, op: &OperatingPoint) -> f64 {
    let k_t_b = 1e-3 * 10f64.powf((-174.0 + 10.0 * cfg.bandwidth_hz.log10()) / 10.0);
    let (g_lna, g_mix) = (lin(cfg.lna_gain_db), lin(cfg.rx_mixer_gain_db));
    let f_rx = lin(cfg.lna_nf_db) + (lin(cfg.rx_mixer_nf_db) - 1.0) / g_lna + (lin(cfg.rx_vga_nf_db) - 1.0) / (g_lna * g_mix);
    let disconnected = cfg.antenna_separation_db.is_infinite();
    let a2 = if disconnected { 0.0 } else { lin(-cfg.vm_attenuation_after_db) };
    let vm = a2 * (lin(cfg.vm_gain_db) * lin(cfg.vm_nf_db) - 1.0);
    let a_ant = lin(-cfg.antenna_separation_db);
    let leak = a_ant * lin(-cfg.rf_cancellation_db);
    let tx_chain = lin(op.pa_gain_db)
        * (lin(cfg.pa_nf_db) - 1.0 + lin(cfg.tx_mixer_nf_db) * lin(cfg.tx_mixer_gain_db) * lin(op.tx_vga_gain_db));
    let gain = lin(op.rx_vga_gain_db) * g_lna * g_mix;
    gain * (f_rx + vm - a_ant + leak * tx_chain) * k_t_b
}
