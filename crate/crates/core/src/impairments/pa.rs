//! Parallel Hammerstein power-amplifier model and its calibration against
//! the n-th order intercept relation `P_nth = P_out - (n-1)(IIPn - P_in)`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::signal::{convolve_causal, dbm_to_watts, spectrum, watts_to_dbm, ComplexSignal, PowerDbm};

/// `|x|^(p-1) x`
pub fn basis(p: usize, x: Complex64) -> Complex64 {
    match p {
        1 => x,
        3 => x * x.norm_sqr(),
        _ => x * x.norm().powi(p as i32 - 1),
    }
}

pub fn basis_signal(p: usize, x: &[Complex64]) -> Vec<Complex64> {
    x.iter().map(|&v| basis(p, v)).collect()
}

/// Odd-order branch filters `f_p(k)` for `p = 1, 3, ..., order`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhModel {
    order: usize,
    memory: usize,
    branches: Vec<Vec<Complex64>>,
}

impl PhModel {
    /// `branches[i]` holds the taps of order `2i + 1`.
    pub fn new(branches: Vec<Vec<Complex64>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(invalid("branches", "need at least the linear branch"));
        }
        let memory = branches[0].len();
        if memory == 0 || branches.iter().any(|b| b.len() != memory) {
            return Err(invalid("branches", "every branch needs the same nonzero tap count"));
        }
        Ok(Self {
            order: 2 * branches.len() - 1,
            memory,
            branches,
        })
    }

    pub fn identity() -> Self {
        Self::linear(vec![Complex64::new(1.0, 0.0)])
    }

    pub fn linear(taps: Vec<Complex64>) -> Self {
        Self::new(vec![taps]).expect("nonempty linear branch")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn branch(&self, p: usize) -> Option<&[Complex64]> {
        if p.is_multiple_of(2) || p == 0 {
            return None;
        }
        self.branches.get((p - 1) / 2).map(|v| v.as_slice())
    }

    pub fn branches(&self) -> &[Vec<Complex64>] {
        &self.branches
    }

    /// Linear part only (higher branches dropped).
    pub fn linearized(&self) -> Self {
        Self::linear(self.branches[0].clone())
    }

    pub fn is_linear(&self) -> bool {
        self.branches[1..]
            .iter()
            .all(|b| b.iter().all(|t| t.norm() == 0.0))
    }
}

pub fn apply_ph(s: &ComplexSignal, m: &PhModel) -> ComplexSignal {
    let x = s.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for (i, taps) in m.branches.iter().enumerate() {
        if taps.iter().all(|t| t.norm() == 0.0) {
            continue;
        }
        let p = 2 * i + 1;
        let psi = basis_signal(p, x);
        for (o, v) in out.iter_mut().zip(convolve_causal(taps, &psi)) {
            *o += v;
        }
    }
    s.with_samples(out)
}

/// Tone and product powers (dBm) from a two-tone test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoToneResult {
    pub fundamental_dbm: f64,
    pub im3_dbm: f64,
    pub im5_dbm: f64,
}

const TT_LEN: usize = 4096;
const TT_K1: usize = 40;
const TT_K2: usize = 48;

/// Drives `m` with two equal tones of `p_in_dbm` each and reads the per-tone
/// fundamental and per-product IM3/IM5 powers off exact DFT bins.
pub fn two_tone_test(m: &PhModel, p_in_dbm: f64) -> TwoToneResult {
    let n = TT_LEN;
    let amp = dbm_to_watts(PowerDbm(p_in_dbm)).sqrt();
    let x: Vec<Complex64> = (0..2 * n)
        .map(|i| {
            let t = i as f64 / n as f64;
            Complex64::from_polar(amp, 2.0 * PI * TT_K1 as f64 * t)
                + Complex64::from_polar(amp, 2.0 * PI * TT_K2 as f64 * t)
        })
        .collect();
    let s = ComplexSignal::new(x, 1.0).expect("unit rate");
    let y = apply_ph(&s, m);
    // second period is in steady state
    let spec = spectrum(&y.slice(n, 2 * n));
    let bin = |k: i64| {
        let idx = k.rem_euclid(n as i64) as usize;
        spec[idx].norm_sqr() / (n as f64 * n as f64)
    };
    let (k1, k2) = (TT_K1 as i64, TT_K2 as i64);
    let fund = 0.5 * (bin(k1) + bin(k2));
    let im3 = 0.5 * (bin(2 * k1 - k2) + bin(2 * k2 - k1));
    let im5 = 0.5 * (bin(3 * k1 - 2 * k2) + bin(3 * k2 - 2 * k1));
    TwoToneResult {
        fundamental_dbm: watts_to_dbm(fund),
        im3_dbm: watts_to_dbm(im3),
        im5_dbm: watts_to_dbm(im5),
    }
}

/// Shape parameters of a calibrated PA model beyond gain and IIP3.
#[derive(Debug, Clone, PartialEq)]
pub struct PaDesign {
    /// Relative memory taps shared by every branch.
    pub memory_profile: Vec<Complex64>,
    /// Level of the fifth-order branch's contribution to the IM3 product,
    /// below the third-order contribution, at `fifth_reference_output_dbm`.
    pub fifth_below_third_db: f64,
    pub fifth_reference_output_dbm: f64,
    /// Input level (relative to IIP3) where the third-order branch is fitted.
    pub fit_backoff_db: f64,
}

impl Default for PaDesign {
    fn default() -> Self {
        Self {
            memory_profile: vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(-0.05, 0.0),
                Complex64::new(0.01, 0.0),
            ],
            fifth_below_third_db: 25.0,
            fifth_reference_output_dbm: 25.0,
            fit_backoff_db: 15.0,
        }
    }
}

/// Builds an odd-order PH model whose two-tone IM3 follows the intercept
/// relation for the given gain and IIP3.
///
/// The third-order branch is compressive (opposite to the linear branch) and
/// is fitted by a secant search on the measured two-tone IM3 at
/// `iip3 - fit_backoff_db`. The fifth-order branch is in quadrature with the
/// third so the two contributions add in power.
pub fn pa_from_specs(gain_db: f64, iip3_dbm: f64, order: usize, design: &PaDesign) -> Result<PhModel> {
    if order < 3 || order.is_multiple_of(2) {
        return Err(invalid("order", format!("PA order must be odd and >= 3, got {order}")));
    }
    if design.memory_profile.is_empty() {
        return Err(invalid("memory_profile", "need at least one tap"));
    }
    let a1 = 10f64.powf(gain_db / 20.0);
    let profile = &design.memory_profile;
    let lead = profile[0];
    let profile: Vec<Complex64> = profile.iter().map(|t| t / lead).collect();
    let n_branches = order.div_ceil(2);

    let build = |c3: f64| -> PhModel {
        let mut branches = vec![profile.iter().map(|t| t * a1).collect::<Vec<_>>()];
        for i in 1..n_branches {
            let p = 2 * i + 1;
            let coef = match p {
                3 => Complex64::new(-c3, 0.0),
                5 => {
                    let p_ref = dbm_to_watts(PowerDbm(design.fifth_reference_output_dbm - gain_db));
                    let mag = 10f64.powf(-design.fifth_below_third_db / 20.0) * c3 / (5.0 * p_ref);
                    Complex64::new(0.0, -mag)
                }
                _ => Complex64::new(0.0, 0.0),
            };
            branches.push(profile.iter().map(|t| t * coef).collect());
        }
        PhModel::new(branches).expect("consistent branches")
    };

    if iip3_dbm == f64::INFINITY {
        return Ok(build(0.0));
    }
    if !iip3_dbm.is_finite() {
        return Err(invalid("iip3", format!("must be finite or +inf, got {iip3_dbm}")));
    }

    let iip3_w = dbm_to_watts(PowerDbm(iip3_dbm));
    let p_fit = iip3_dbm - design.fit_backoff_db;
    let target = crate::linkbudget::nl_power(p_fit + gain_db, p_fit, iip3_dbm, 3);
    let err = |log_c: f64| two_tone_test(&build(log_c.exp()), p_fit).im3_dbm - target;

    // secant on ln(c3); the IM3 level is close to linear in it
    let mut x0 = (a1 / iip3_w).ln();
    let mut f0 = err(x0);
    let mut x1 = x0 - f0 / 20.0 * std::f64::consts::LN_10;
    let mut f1 = err(x1);
    for _ in 0..40 {
        if f1.abs() < 1e-9 || (f1 - f0).abs() < 1e-15 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = err(x1);
    }
    Ok(build(x1.exp()))
}

/// Mean power gain of a FIR filter for a signal with autocorrelation `r`
/// (`r[k] = E[x(n) conj(x(n-k))]`, `r[0]` normalized to 1).
pub fn filter_power_gain(taps: &[Complex64], r: &[Complex64]) -> f64 {
    let at = |k: i64| -> Complex64 {
        let i = k.unsigned_abs() as usize;
        let v = r.get(i).copied().unwrap_or_default();
        if k >= 0 {
            v
        } else {
            v.conj()
        }
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in taps.iter().enumerate() {
        for (j, b) in taps.iter().enumerate() {
            acc += a * b.conj() * at(j as i64 - i as i64);
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkbudget::nl_power;

    #[test]
    fn identity_and_zero() {
        let s = ComplexSignal::new(
            (0..32).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect(),
            1.0,
        )
        .unwrap();
        assert_eq!(apply_ph(&s, &PhModel::identity()), s);
        let z = ComplexSignal::zeros(16, 1.0).unwrap();
        let m = pa_from_specs(27.0, 13.0, 5, &PaDesign::default()).unwrap();
        assert!(apply_ph(&z, &m).samples().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn memoryless_cubic_closed_form() {
        let a3 = Complex64::new(-0.2, 0.1);
        let m = PhModel::new(vec![vec![Complex64::new(1.0, 0.0)], vec![a3]]).unwrap();
        let c = Complex64::new(0.6, -0.3);
        let s = ComplexSignal::new(vec![c; 8], 1.0).unwrap();
        let want = c + a3 * c.norm_sqr() * c;
        for v in apply_ph(&s, &m).samples() {
            assert!((v - want).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_orders() {
        let d = PaDesign::default();
        assert!(pa_from_specs(27.0, 13.0, 4, &d).is_err());
        assert!(pa_from_specs(27.0, 13.0, 1, &d).is_err());
        assert!(PhModel::new(vec![vec![Complex64::new(1.0, 0.0)], vec![]]).is_err());
    }

    #[test]
    fn linear_when_iip3_infinite() {
        let m = pa_from_specs(27.0, f64::INFINITY, 5, &PaDesign::default()).unwrap();
        assert!(m.is_linear());
        assert_eq!(m.order(), 5);
        assert!((m.branch(1).unwrap()[0].re - 10f64.powf(27.0 / 20.0)).abs() < 1e-12);
    }

    #[test]
    fn table_pa_two_tone_tracks_intercept_relation() {
        let m = pa_from_specs(27.0, 13.0, 5, &PaDesign::default()).unwrap();
        assert_eq!(m.memory(), 3);
        for p_in in [-10.0, -5.0, 0.0, 5.0] {
            let tt = two_tone_test(&m, p_in);
            let want = nl_power(p_in + 27.0, p_in, 13.0, 3);
            assert!((tt.im3_dbm - want).abs() < 1.0, "P_in {p_in}: {} vs {want}", tt.im3_dbm);
        }
        let tt = two_tone_test(&m, 5.0);
        assert!((tt.im3_dbm - 16.0).abs() < 1.0);
    }

    #[test]
    fn intercept_point_definition_at_unity_gain() {
        // extrapolate the small-signal IM3 line to P_in = IIP3
        let m = pa_from_specs(0.0, 13.0, 3, &PaDesign {
            memory_profile: vec![Complex64::new(1.0, 0.0)],
            ..PaDesign::default()
        })
        .unwrap();
        let p_small = -10.0;
        let tt = two_tone_test(&m, p_small);
        let im3_at_ip = tt.im3_dbm + 3.0 * (13.0 - p_small);
        let fund_at_ip = (tt.fundamental_dbm - p_small) + 13.0;
        assert!((im3_at_ip - fund_at_ip).abs() < 1.0, "{im3_at_ip} vs {fund_at_ip}");
    }
}
