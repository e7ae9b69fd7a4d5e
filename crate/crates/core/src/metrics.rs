//! Twin-run SINR, IRR and K-factor measurements.
//!
//! SINR uses common random numbers: pass A (SOI on) and pass B (SOI off)
//! share every seed and the frozen AGC gains, so `A - B` isolates the SOI as
//! it appears at the detector, and `B` after cancellation is the residual.

use std::fmt;

use crate::cancellers::{calibrate, cancel, CancellerEstimate, CancellerKind};
use crate::config::TransceiverConfig;
use crate::error::{Error, Result};
use crate::impairments::chain::{split, AgcMode, SeedSet, Transceiver};
use crate::impairments::channel::SiChannel;
use crate::signal::{inband_power, lin_to_db, spectrum, watts_to_dbm, ComplexSignal};

/// A curve in the SINR comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Curve {
    /// No self-interference at all.
    Reference,
    Canceller(CancellerKind),
}

impl Curve {
    pub const ALL: [Curve; 5] = [
        Curve::Reference,
        Curve::Canceller(CancellerKind::Linear),
        Curve::Canceller(CancellerKind::WidelyLinear),
        Curve::Canceller(CancellerKind::NonlinearPH),
        Curve::Canceller(CancellerKind::JointAugmented),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Curve::Reference => "reference",
            Curve::Canceller(k) => k.name(),
        }
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrRow {
    pub tx_power_dbm: f64,
    pub curve: Curve,
    pub sinr_db: f64,
    /// In-band interference-plus-noise power at the detector (dBm).
    pub residual_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SinrReport {
    pub rows: Vec<SinrRow>,
}

impl SinrReport {
    pub fn get(&self, tx_power_dbm: f64, curve: Curve) -> Option<&SinrRow> {
        self.rows
            .iter()
            .find(|r| r.curve == curve && (r.tx_power_dbm - tx_power_dbm).abs() < 1e-9)
    }
}

const PASS_CAL: u64 = 1;
const PASS_EVAL: u64 = 2;

fn sinr_of(soi: &ComplexSignal, residual: &ComplexSignal, bw: f64) -> Result<(f64, f64)> {
    let s = inband_power(soi, bw)?;
    let r = inband_power(residual, bw)?;
    if r == 0.0 {
        return Err(Error::InvalidMeasurement("residual power is zero".into()));
    }
    Ok((lin_to_db(s / r), watts_to_dbm(r)))
}

/// SI-free SINR at `tx_power_dbm`, from two passes with the RF path removed.
pub fn reference_sinr(cfg: &TransceiverConfig, tx_power_dbm: f64, seeds: &SeedSet) -> Result<(f64, f64)> {
    let ref_cfg = TransceiverConfig {
        antenna_separation_db: f64::INFINITY,
        ..cfg.clone()
    };
    let t = Transceiver::new(&ref_cfg, seeds.hardware)?;
    let ev = seeds.fresh(PASS_EVAL);
    let n = cfg.evaluation_samples;
    let a = t.run_seeded(true, tx_power_dbm, n, &ev, AgcMode::Auto)?;
    let b = t.run_seeded(false, tx_power_dbm, n, &ev, AgcMode::Fixed(a.diagnostics.agc))?;
    let soi = a.y_adc.sub(&b.y_adc)?;
    sinr_of(&soi, &b.y_adc, cfg.bandwidth_hz)
}

/// Calibration, then SOI-on and SOI-off evaluation passes for each `kind`.
/// Returns `(sinr_db, residual_dbm)` per kind in the given order.
pub fn canceller_sinrs(
    cfg: &TransceiverConfig,
    tx_power_dbm: f64,
    kinds: &[CancellerKind],
    seeds: &SeedSet,
) -> Result<Vec<(f64, f64)>> {
    let t = Transceiver::new(cfg, seeds.hardware)?;
    let (m, p) = (cfg.canceller_memory, cfg.canceller_order);
    let cal = t.run_seeded(false, tx_power_dbm, cfg.calibration_samples, &seeds.fresh(PASS_CAL), AgcMode::Auto)?;
    let agc = AgcMode::Fixed(cal.diagnostics.agc);
    let ev = seeds.fresh(PASS_EVAL);
    let a = t.run_seeded(true, tx_power_dbm, cfg.evaluation_samples, &ev, agc)?;
    let b = t.run_seeded(false, tx_power_dbm, cfg.evaluation_samples, &ev, agc)?;
    kinds
        .iter()
        .map(|&k| {
            let est: CancellerEstimate = calibrate(k, &cal.x, &cal.y_adc, m, p, m / 2)?;
            let ca = cancel(&est, &a.x, &a.y_adc)?;
            let cb = cancel(&est, &b.x, &b.y_adc)?;
            let soi = ca.sub(&cb)?;
            sinr_of(&soi, &cb, cfg.bandwidth_hz)
        })
        .collect()
}

/// Twin-run SINR (dB) for one canceller.
pub fn sinr_twin_run(cfg: &TransceiverConfig, tx_power_dbm: f64, kind: CancellerKind, seeds: &SeedSet) -> Result<f64> {
    Ok(canceller_sinrs(cfg, tx_power_dbm, &[kind], seeds)?[0].0)
}

/// All five curves at one transmit power.
pub fn sinr_point(cfg: &TransceiverConfig, tx_power_dbm: f64, seeds: &SeedSet) -> Result<Vec<SinrRow>> {
    let (rs, rr) = reference_sinr(cfg, tx_power_dbm, seeds)?;
    let mut rows = vec![SinrRow {
        tx_power_dbm,
        curve: Curve::Reference,
        sinr_db: rs,
        residual_dbm: rr,
    }];
    let vals = canceller_sinrs(cfg, tx_power_dbm, &CancellerKind::ALL, seeds)?;
    for (k, (s, r)) in CancellerKind::ALL.into_iter().zip(vals) {
        rows.push(SinrRow {
            tx_power_dbm,
            curve: Curve::Canceller(k),
            sinr_db: s,
            residual_dbm: r,
        });
    }
    Ok(rows)
}

/// Sweep over transmit powers. The hardware realization is shared by all
/// points; data and noise are drawn per point. Points run in parallel and
/// rows come back in grid order.
pub fn sinr_sweep(cfg: &TransceiverConfig, tx_powers: &[f64], seed: u64) -> Result<SinrReport> {
    let base = SeedSet::from_seed(seed);
    let results: Vec<Result<Vec<SinrRow>>> = std::thread::scope(|s| {
        let handles: Vec<_> = tx_powers
            .iter()
            .enumerate()
            .map(|(i, &tx)| {
                let seeds = base.fresh(split(seed, 100 + i as u64));
                s.spawn(move || sinr_point(cfg, tx, &seeds))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::InvalidMeasurement("sweep worker panicked".into()))))
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(SinrReport { rows })
}

/// Direct-to-image power ratio (dB) of `after` for the single tone in `before`.
pub fn measure_irr(before: &ComplexSignal, after: &ComplexSignal) -> Result<f64> {
    if before.is_empty() || before.len() != after.len() {
        return Err(Error::InvalidMeasurement("IRR needs equal-length nonempty signals".into()));
    }
    let n = before.len();
    let sb = spectrum(before);
    let total: f64 = sb.iter().map(|v| v.norm_sqr()).sum();
    let (k, peak) = sb
        .iter()
        .enumerate()
        .map(|(k, v)| (k, v.norm_sqr()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    if total == 0.0 || peak < 0.99 * total || k == 0 || 2 * k == n {
        return Err(Error::InvalidMeasurement("input is not a single off-DC tone on a DFT bin".into()));
    }
    let sa = spectrum(after);
    let direct = sa[k].norm_sqr();
    let image = sa[n - k].norm_sqr();
    if image <= direct * 1e-30 {
        return Ok(f64::INFINITY);
    }
    Ok(lin_to_db(direct / image))
}

/// Total LOS power over total diffuse power of an ensemble (dB).
pub fn measure_k_factor(channels: &[SiChannel]) -> Result<f64> {
    if channels.is_empty() {
        return Err(Error::InvalidMeasurement("empty channel ensemble".into()));
    }
    let los: f64 = channels.iter().map(|c| c.los_power()).sum();
    let dif: f64 = channels.iter().map(|c| c.diffuse_power()).sum();
    if dif == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(lin_to_db(los / dif))
}
