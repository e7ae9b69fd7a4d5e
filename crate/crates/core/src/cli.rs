//! Command-line orchestration: config loading, sweeps and CSV emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::config::TransceiverConfig;
use crate::error::{invalid, Error, Result};
use crate::linkbudget::{budget_sweep, PowerBudgetReport};
use crate::metrics::{sinr_sweep, SinrReport};

pub const SINR_SCHEMA: &str = "# fdsim sinr-sweep v1";
pub const BUDGET_SCHEMA: &str = "# fdsim budget-sweep v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    SinrSweep,
    BudgetSweep,
    Validate,
}

/// One invocation of the simulator.
#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "fdsim", version, about = "Full-duplex transceiver simulator")]
pub struct RunSpec {
    /// Config file (key = value). Built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sinr-sweep")]
    pub mode: Mode,
    /// Lowest transmit power (dBm).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tx_min: f64,
    /// Highest transmit power (dBm).
    #[arg(long, default_value_t = 25.0, allow_negative_numbers = true)]
    pub tx_max: f64,
    /// Grid step (dB).
    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub tx_step: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file. Standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunSpec {
    pub fn new(mode: Mode) -> Self {
        Self {
            config: None,
            mode,
            tx_min: 0.0,
            tx_max: 25.0,
            tx_step: 2.5,
            seed: 1,
            out: None,
        }
    }

    /// Sorted, nonempty transmit-power grid from `tx_min` to `tx_max`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.tx_min.is_finite() && self.tx_max.is_finite()) {
            return Err(invalid("tx_min", "grid bounds must be finite"));
        }
        if !(self.tx_step > 0.0) {
            return Err(invalid("tx_step", "must be positive"));
        }
        if self.tx_max < self.tx_min {
            return Err(invalid("tx_max", "must not be below tx_min"));
        }
        let n = ((self.tx_max - self.tx_min) / self.tx_step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.tx_min + i as f64 * self.tx_step).collect())
    }

    pub fn load_config(&self) -> Result<TransceiverConfig> {
        match &self.config {
            Some(p) => TransceiverConfig::load(p),
            None => Ok(TransceiverConfig::default()),
        }
    }
}

/// Six significant digits, plain notation where it stays short.
pub fn sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

pub fn sinr_csv(report: &SinrReport) -> String {
    let mut s = format!("{SINR_SCHEMA}\ntx_power_dbm,canceller,sinr_db,residual_dbm\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            sig6(r.tx_power_dbm),
            r.curve.name(),
            sig6(r.sinr_db),
            sig6(r.residual_dbm)
        );
    }
    s
}

pub fn budget_csv(report: &PowerBudgetReport) -> String {
    let mut s = format!("{BUDGET_SCHEMA}\ntx_power_dbm,p_si,p_si_im,p_n_rx,p_n_tx,p_nl_tx,p_nl_rx,p_q,p_soi\n");
    for r in &report.rows {
        let cols = [
            r.tx_power_dbm,
            r.p_si,
            r.p_si_im,
            r.p_n_rx,
            r.p_n_tx,
            r.p_nl_tx,
            r.p_nl_rx,
            r.p_q,
            r.p_soi,
        ];
        let line: Vec<String> = cols.iter().map(|&v| sig6(v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Pass/fail report of the config cross-checks. Fails naming the first bad check.
pub fn validate_report(cfg: &TransceiverConfig) -> Result<String> {
    let checks = cfg.checks();
    let mut s = String::new();
    for c in &checks {
        let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(Error::InvalidParameter {
            name: c.name,
            reason: format!("check failed: {}\n{s}", c.detail),
        }),
        None => Ok(s),
    }
}

/// Produces the full output text for `spec`.
pub fn render(spec: &RunSpec) -> Result<String> {
    let cfg = spec.load_config()?;
    match spec.mode {
        Mode::Validate => validate_report(&cfg),
        Mode::SinrSweep => Ok(sinr_csv(&sinr_sweep(&cfg, &spec.grid()?, spec.seed)?)),
        Mode::BudgetSweep => Ok(budget_csv(&budget_sweep(&cfg, &spec.grid()?)?)),
    }
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    let res = std::fs::write(path, text);
    if let Err(e) = res {
        let _ = std::fs::remove_file(path);
        return Err(e.into());
    }
    Ok(())
}

/// Runs `spec`, writing to `spec.out` or returning the text for stdout.
/// Any partial output file is removed on failure.
pub fn run(spec: &RunSpec) -> Result<Option<String>> {
    let outcome = render(spec);
    match (&spec.out, outcome) {
        (Some(p), Ok(text)) => write_output(p, &text).map(|_| None),
        (None, Ok(text)) => Ok(Some(text)),
        (Some(p), Err(e)) => {
            if p.exists() {
                let _ = std::fs::remove_file(p);
            }
            Err(e)
        }
        (None, Err(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_eleven_points() {
        let g = RunSpec::new(Mode::SinrSweep).grid().unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], 25.0);
        let bad = RunSpec {
            tx_step: 0.0,
            ..RunSpec::new(Mode::SinrSweep)
        };
        assert!(bad.grid().is_err());
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(15.0312345), "15.0312");
        assert_eq!(sig6(-98.912345), "-98.9123");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.25e-9), "1.25000e-9");
        assert_eq!(sig6(f64::NEG_INFINITY), "-inf");
        assert_eq!(sig6(2.5), "2.5");
    }

    #[test]
    fn parses_flags() {
        let s = RunSpec::try_parse_from([
            "fdsim", "--mode", "budget-sweep", "--tx-min", "-5", "--tx-max", "5", "--tx-step", "5", "--seed", "9",
        ])
        .unwrap();
        assert_eq!(s.mode, Mode::BudgetSweep);
        assert_eq!(s.grid().unwrap(), vec![-5.0, 0.0, 5.0]);
        assert_eq!(s.seed, 9);
        assert!(RunSpec::try_parse_from(["fdsim", "--mode", "plot"]).is_err());
    }

    #[test]
    fn validate_default_passes_and_broken_fails() {
        assert!(validate_report(&TransceiverConfig::default()).is_ok());
        let cfg = TransceiverConfig {
            sensitivity_dbm: -80.0,
            ..TransceiverConfig::default()
        };
        match validate_report(&cfg) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "sensitivity"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failed_run_leaves_no_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o.csv");
        std::fs::write(&out, "stale").unwrap();
        let cfg_path = dir.path().join("bad.cfg");
        std::fs::write(&cfg_path, "no_such_key = 1\n").unwrap();
        let spec = RunSpec {
            config: Some(cfg_path),
            out: Some(out.clone()),
            ..RunSpec::new(Mode::BudgetSweep)
        };
        assert!(run(&spec).is_err());
        assert!(!out.exists());
    }
}
