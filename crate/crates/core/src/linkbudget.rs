//! Analytic link budget: intercept-point distortion, ADC quantization floor,
//! detector thermal noise and per-component powers at the detector input.

use crate::config::TransceiverConfig;
use crate::error::{invalid, Error, Result};
use crate::impairments::chain::OperatingPoint;
use crate::impairments::stage::{cascade_noise_factor, StageSpec};
use crate::signal::{db_to_lin, lin_to_db, watts_to_dbm};

/// Power of an n-th order distortion product: `p_out - (n-1)(iipn - p_in)`.
pub fn nl_power(p_out_dbm: f64, p_in_dbm: f64, iipn_dbm: f64, n: u32) -> f64 {
    p_out_dbm - (n as f64 - 1.0) * (iipn_dbm - p_in_dbm)
}

/// `6.02 b + 4.76 - PAPR`, with the constant part summed in integer
/// hundredths so round values such as 67 dB come out exact.
pub fn adc_snr(bits: u32, papr_db: f64) -> f64 {
    (602 * bits as i64 + 476) as f64 / 100.0 - papr_db
}

pub fn quantization_floor(p_ad_dbm: f64, bits: u32, papr_db: f64) -> f64 {
    p_ad_dbm - adc_snr(bits, papr_db)
}

/// Linear-unit factors of the detector noise expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseTerms {
    pub k_bb: f64,
    pub k_lna: f64,
    pub g1_rx: f64,
    /// Receiver cascade noise factor.
    pub f_rx: f64,
    pub a2: f64,
    pub a_vm: f64,
    pub f_vm: f64,
    pub a_ant: f64,
    pub a_rf: f64,
    pub k_pa: f64,
    pub f_pa: f64,
    pub f_tx: f64,
    pub g1_tx: f64,
    pub k_vga: f64,
    /// Thermal floor in the signal bandwidth (W).
    pub p_th: f64,
}

impl NoiseTerms {
    /// Factors as squared magnitudes for `cfg` at the given gains. An infinite
    /// antenna separation also disconnects the RF cancellation path.
    pub fn from_config(cfg: &TransceiverConfig, op: &OperatingPoint) -> Self {
        let stages = cfg.receiver_stages_at(op.rx_vga_gain_db);
        let disconnected = cfg.antenna_separation_db == f64::INFINITY;
        Self {
            k_bb: db_to_lin(op.rx_vga_gain_db),
            k_lna: db_to_lin(cfg.lna_gain_db),
            g1_rx: db_to_lin(cfg.rx_mixer_gain_db),
            f_rx: cascade_noise_factor(&stages),
            a2: if disconnected { 0.0 } else { db_to_lin(-cfg.vm_attenuation_after_db) },
            a_vm: db_to_lin(cfg.vm_gain_db),
            f_vm: db_to_lin(cfg.vm_nf_db),
            a_ant: db_to_lin(-cfg.antenna_separation_db),
            a_rf: db_to_lin(-cfg.rf_cancellation_db),
            k_pa: db_to_lin(op.pa_gain_db),
            f_pa: db_to_lin(cfg.pa_nf_db),
            f_tx: db_to_lin(cfg.tx_mixer_nf_db),
            g1_tx: db_to_lin(cfg.tx_mixer_gain_db),
            k_vga: db_to_lin(op.tx_vga_gain_db),
            p_th: cfg.thermal_floor_w(),
        }
    }

    fn check(&self) -> Result<()> {
        for (name, f) in [("f_rx", self.f_rx), ("f_vm", self.f_vm), ("f_pa", self.f_pa), ("f_tx", self.f_tx)] {
            if !(f >= 1.0) {
                return Err(invalid(name, format!("noise factor {f} is below 1")));
            }
        }
        Ok(())
    }

    fn tx_bracket(&self) -> f64 {
        self.a2 * (self.a_vm * self.f_vm - 1.0) - self.a_ant
            + self.a_ant * self.a_rf * self.k_pa * (self.f_pa - 1.0 + self.f_tx * self.g1_tx * self.k_vga)
    }
}

/// RX- and TX-induced thermal noise (W) at the detector input.
pub fn thermal_noise_powers(terms: &NoiseTerms) -> Result<(f64, f64)> {
    terms.check()?;
    let g = terms.k_bb * terms.k_lna * terms.g1_rx;
    let bracket = terms.tx_bracket();
    if terms.f_rx + bracket < 0.0 {
        return Err(Error::OutOfModel(format!(
            "detector noise bracket is negative ({:.3e}); the noise expression is outside its validity range",
            terms.f_rx + bracket
        )));
    }
    Ok((g * terms.f_rx * terms.p_th, g * bracket * terms.p_th))
}

/// Total detector noise as one expression.
pub fn thermal_noise_total(terms: &NoiseTerms) -> Result<f64> {
    terms.check()?;
    let t = terms;
    let p = t.k_bb
        * t.k_lna
        * t.g1_rx
        * (t.f_rx + t.a2 * (t.a_vm * t.f_vm - 1.0) - t.a_ant
            + t.a_ant * t.a_rf * t.k_pa * (t.f_pa - 1.0 + t.f_tx * t.g1_tx * t.k_vga))
        * t.p_th;
    if p < 0.0 {
        return Err(Error::OutOfModel(format!("detector noise evaluates to {p:.3e} W")));
    }
    Ok(p)
}

/// Component powers (dBm) at the detector input for one transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetRow {
    pub tx_power_dbm: f64,
    pub p_si: f64,
    pub p_si_im: f64,
    pub p_n_rx: f64,
    pub p_n_tx: f64,
    pub p_nl_tx: f64,
    pub p_nl_rx: f64,
    pub p_q: f64,
    pub p_soi: f64,
    /// LNA input to detector gain set by the AGC.
    pub rx_gain_db: f64,
}

impl BudgetRow {
    /// Residual components with their column names, SOI excluded.
    pub fn residuals(&self) -> [(&'static str, f64); 7] {
        [
            ("p_si", self.p_si),
            ("p_si_im", self.p_si_im),
            ("p_n_rx", self.p_n_rx),
            ("p_n_tx", self.p_n_tx),
            ("p_nl_tx", self.p_nl_tx),
            ("p_nl_rx", self.p_nl_rx),
            ("p_q", self.p_q),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerBudgetReport {
    pub rows: Vec<BudgetRow>,
}

fn sum_dbm(vals: &[f64]) -> f64 {
    watts_to_dbm(vals.iter().map(|&v| crate::signal::dbm_to_watts(crate::signal::PowerDbm(v))).sum())
}

/// IM2 plus IM3 output power (dBm) of one stage; `None` intercepts contribute nothing.
fn stage_distortion_dbm(stage: &StageSpec, p_in: f64) -> f64 {
    let p_out = p_in + stage.gain_db;
    let mut parts = Vec::new();
    if let Some(ip) = stage.iip2_dbm.filter(|v| v.is_finite()) {
        parts.push(nl_power(p_out, p_in, ip, 2));
    }
    if let Some(ip) = stage.iip3_dbm.filter(|v| v.is_finite()) {
        parts.push(nl_power(p_out, p_in, ip, 3));
    }
    if parts.is_empty() {
        f64::NEG_INFINITY
    } else {
        sum_dbm(&parts)
    }
}

/// One budget row for `tx_power_dbm` at the PA output.
pub fn budget_row(cfg: &TransceiverConfig, tx_power_dbm: f64) -> Result<BudgetRow> {
    cfg.validate()?;
    let tx_vga = tx_power_dbm - cfg.dac_power_dbm - cfg.tx_mixer_gain_db - cfg.pa_gain_db;
    if !(cfg.tx_vga_min_db..=cfg.tx_vga_max_db).contains(&tx_vga) {
        return Err(Error::GainOutOfRange {
            stage: "tx_vga",
            gain_db: tx_vga,
            min_db: cfg.tx_vga_min_db,
            max_db: cfg.tx_vga_max_db,
        });
    }
    let coupling = -cfg.antenna_separation_db - cfg.rf_cancellation_db;

    // LNA-input-referred components
    let si_in = tx_power_dbm + coupling;
    let image_offset = lin_to_db(db_to_lin(-cfg.tx_irr_db) + db_to_lin(-cfg.rx_irr_db));
    let si_im_in = si_in + image_offset;
    let pa_in = tx_power_dbm - cfg.pa_gain_db;
    let nl_tx_in = if cfg.pa_nonlinearity && cfg.pa_iip3_dbm.is_finite() {
        nl_power(tx_power_dbm, pa_in, cfg.pa_iip3_dbm, 3) + coupling
    } else {
        f64::NEG_INFINITY
    };
    let soi_in = cfg.soi_power_dbm;
    let front_gain = cfg.lna_gain_db + cfg.rx_mixer_gain_db;

    let noise_at = |rx_vga: f64| -> Result<(f64, f64)> {
        let op = OperatingPoint {
            tx_vga_gain_db: tx_vga,
            pa_gain_db: cfg.pa_gain_db,
            rx_vga_gain_db: rx_vga,
        };
        thermal_noise_powers(&NoiseTerms::from_config(cfg, &op))
    };

    // AGC: total detector power on target; noise depends weakly on the VGA gain
    let mut rx_vga = cfg.rx_vga_max_db;
    for _ in 0..3 {
        let (n_rx, n_tx) = noise_at(rx_vga)?;
        let noise_in = watts_to_dbm(n_rx + n_tx) - front_gain - rx_vga;
        let total_in = sum_dbm(&[si_in, si_im_in, nl_tx_in, soi_in, noise_in]);
        rx_vga = cfg.agc_target_dbm() - total_in - front_gain;
    }
    if !(cfg.rx_vga_min_db..=cfg.rx_vga_max_db).contains(&rx_vga) {
        return Err(Error::GainOutOfRange {
            stage: "rx_vga",
            gain_db: rx_vga,
            min_db: cfg.rx_vga_min_db,
            max_db: cfg.rx_vga_max_db,
        });
    }
    let g = front_gain + rx_vga;
    let (n_rx, n_tx) = noise_at(rx_vga)?;
    let p_n_rx = watts_to_dbm(n_rx);
    let p_n_tx = watts_to_dbm(n_tx);

    // receiver distortion of the total stage input, referred to the detector
    let total_in = sum_dbm(&[si_in, si_im_in, nl_tx_in, soi_in, p_n_rx - g]);
    let stages = cfg.receiver_stages_at(rx_vga);
    let mut p_in = total_in;
    let mut nl_rx = Vec::new();
    let mut after = g;
    for st in &stages {
        after -= st.gain_db;
        nl_rx.push(stage_distortion_dbm(st, p_in) + after);
        p_in += st.gain_db;
    }

    Ok(BudgetRow {
        tx_power_dbm,
        p_si: sum_dbm(&[p_n_rx, p_n_tx]) - cfg.linear_dc_residual_below_floor_db,
        p_si_im: si_im_in + g,
        p_n_rx,
        p_n_tx,
        p_nl_tx: nl_tx_in + g,
        p_nl_rx: sum_dbm(&nl_rx),
        p_q: quantization_floor(cfg.agc_target_dbm(), cfg.adc_bits, cfg.papr_db),
        p_soi: soi_in + g,
        rx_gain_db: g,
    })
}

pub fn budget_sweep(cfg: &TransceiverConfig, tx_powers: &[f64]) -> Result<PowerBudgetReport> {
    if tx_powers.is_empty() {
        return Err(invalid("tx_powers", "sweep needs at least one point"));
    }
    let rows = tx_powers.iter().map(|&t| budget_row(cfg, t)).collect::<Result<Vec<_>>>()?;
    Ok(PowerBudgetReport { rows })
}
