//! Browser bindings for the simulator: power budget curves, SINR of every
//! canceller at one transmit power, and the PA two-tone test.
//!
//! Each operation has a plain Rust function returning JSON text, which the
//! `#[wasm_bindgen]` wrappers expose to the page.

use std::fmt::Write as _;

use fdsim::config::TransceiverConfig;
use fdsim::impairments::chain::SeedSet;
use fdsim::impairments::pa::{pa_from_specs, two_tone_test};
use fdsim::linkbudget::{budget_sweep, nl_power, BudgetRow};
use fdsim::metrics::sinr_point;
use wasm_bindgen::prelude::*;

/// Default config with the three demo knobs applied.
pub fn demo_config(separation_db: f64, rf_cancellation_db: f64, irr_db: f64) -> Result<TransceiverConfig, String> {
    let cfg = TransceiverConfig {
        antenna_separation_db: separation_db,
        rf_cancellation_db,
        tx_irr_db: irr_db,
        rx_irr_db: irr_db,
        // scale the VM so its weight stays realizable for the coupling level
        vm_gain_db: TransceiverConfig::default().vm_gain_db + 40.0 - separation_db,
        ..TransceiverConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "null".into()
    }
}

fn array(vals: impl Iterator<Item = f64>) -> String {
    let v: Vec<String> = vals.map(num).collect();
    format!("[{}]", v.join(","))
}

type Column = (&'static str, fn(&BudgetRow) -> f64);

/// Budget components (dBm at the detector) over 0..25 dBm transmit power.
pub fn budget_json(separation_db: f64, rf_cancellation_db: f64, irr_db: f64) -> Result<String, String> {
    let cfg = demo_config(separation_db, rf_cancellation_db, irr_db)?;
    let grid: Vec<f64> = (0..=25).map(f64::from).collect();
    let report = budget_sweep(&cfg, &grid).map_err(|e| e.to_string())?;
    let rows = &report.rows;
    let mut s = format!("{{\"tx_power_dbm\":{}", array(rows.iter().map(|r| r.tx_power_dbm)));
    let cols: [Column; 8] = [
        ("p_si", |r| r.p_si),
        ("p_si_im", |r| r.p_si_im),
        ("p_n_rx", |r| r.p_n_rx),
        ("p_n_tx", |r| r.p_n_tx),
        ("p_nl_tx", |r| r.p_nl_tx),
        ("p_nl_rx", |r| r.p_nl_rx),
        ("p_q", |r| r.p_q),
        ("p_soi", |r| r.p_soi),
    ];
    for (name, f) in cols {
        let _ = write!(s, ",\"{name}\":{}", array(rows.iter().map(f)));
    }
    s.push('}');
    Ok(s)
}

/// Twin-run SINR of the reference and all four cancellers at one power.
pub fn sinr_json(tx_power_dbm: f64, separation_db: f64, rf_cancellation_db: f64, irr_db: f64, seed: u32) -> Result<String, String> {
    let cfg = demo_config(separation_db, rf_cancellation_db, irr_db)?;
    let rows = sinr_point(&cfg, tx_power_dbm, &SeedSet::from_seed(u64::from(seed))).map_err(|e| e.to_string())?;
    let items: Vec<String> = rows
        .iter()
        .map(|r| format!("{{\"curve\":\"{}\",\"sinr_db\":{}}}", r.curve.name(), num(r.sinr_db)))
        .collect();
    Ok(format!("[{}]", items.join(",")))
}

/// Two-tone test of the default PA at `p_in_dbm` per tone, with the intercept prediction.
pub fn two_tone_json(p_in_dbm: f64, iip3_dbm: f64) -> Result<String, String> {
    let cfg = TransceiverConfig::default();
    let pa = pa_from_specs(cfg.pa_gain_db, iip3_dbm, cfg.pa_order, &cfg.pa_design()).map_err(|e| e.to_string())?;
    let r = two_tone_test(&pa, p_in_dbm);
    Ok(format!(
        "{{\"fundamental_dbm\":{},\"im3_dbm\":{},\"im5_dbm\":{},\"im3_formula_dbm\":{}}}",
        num(r.fundamental_dbm),
        num(r.im3_dbm),
        num(r.im5_dbm),
        num(nl_power(p_in_dbm + cfg.pa_gain_db, p_in_dbm, iip3_dbm, 3))
    ))
}

#[wasm_bindgen]
pub fn budget(separation_db: f64, rf_cancellation_db: f64, irr_db: f64) -> Result<String, JsValue> {
    budget_json(separation_db, rf_cancellation_db, irr_db).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sinr(tx_power_dbm: f64, separation_db: f64, rf_cancellation_db: f64, irr_db: f64, seed: u32) -> Result<String, JsValue> {
    sinr_json(tx_power_dbm, separation_db, rf_cancellation_db, irr_db, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn two_tone(p_in_dbm: f64, iip3_dbm: f64) -> Result<String, JsValue> {
    two_tone_json(p_in_dbm, iip3_dbm).map_err(|e| JsValue::from_str(&e))
}
