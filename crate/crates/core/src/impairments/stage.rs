use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::signal::{awgn, db_to_lin, dbm_to_watts, ComplexSignal, PowerDbm};

/// Gain, noise figure and optional intercept points of one analog stage.
/// A missing (or infinite) intercept point means that order is absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSpec {
    pub gain_db: f64,
    pub noise_figure_db: f64,
    pub iip2_dbm: Option<f64>,
    pub iip3_dbm: Option<f64>,
}

impl StageSpec {
    pub fn linear(gain_db: f64, noise_figure_db: f64) -> Self {
        Self {
            gain_db,
            noise_figure_db,
            iip2_dbm: None,
            iip3_dbm: None,
        }
    }

    pub fn without_nonlinearity(self) -> Self {
        Self {
            iip2_dbm: None,
            iip3_dbm: None,
            ..self
        }
    }

    pub fn with_gain(self, gain_db: f64) -> Self {
        Self { gain_db, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gain_db.is_finite() {
            return Err(invalid("gain_db", "stage gain must be finite"));
        }
        if !(self.noise_figure_db.is_finite() && self.noise_figure_db >= 0.0) {
            return Err(invalid("noise_figure_db", "noise figure must be finite and >= 0 dB"));
        }
        Ok(())
    }

    pub fn noise_factor(&self) -> f64 {
        db_to_lin(self.noise_figure_db)
    }

    pub fn power_gain(&self) -> f64 {
        db_to_lin(self.gain_db)
    }

    /// Input-referred polynomial `x + c2 |x|^2 + c3 |x|^2 x`, with `c2` and
    /// `c3` placing the two-tone IM2/IM3 products on the intercept relation.
    pub fn coefficients(&self) -> (f64, f64) {
        let c2 = match self.iip2_dbm {
            Some(ip) if ip.is_finite() => 1.0 / dbm_to_watts(PowerDbm(ip)).sqrt(),
            _ => 0.0,
        };
        let c3 = match self.iip3_dbm {
            Some(ip) if ip.is_finite() => -1.0 / dbm_to_watts(PowerDbm(ip)),
            _ => 0.0,
        };
        (c2, c3)
    }
}

/// Memoryless polynomial, gain, then output-referred noise of power
/// `(F - 1) g p_th`.
pub fn apply_stage(s: &ComplexSignal, spec: &StageSpec, noise_floor_w: f64, seed: u64) -> Result<ComplexSignal> {
    spec.validate()?;
    let (c2, c3) = spec.coefficients();
    let amp = spec.power_gain().sqrt();
    let mut out: Vec<Complex64> = s
        .samples()
        .iter()
        .map(|&x| {
            let e = x.norm_sqr();
            (x + c2 * e + c3 * e * x) * amp
        })
        .collect();
    let noise_power = (spec.noise_factor() - 1.0) * spec.power_gain() * noise_floor_w;
    if noise_power > 0.0 {
        let n = awgn(out.len(), noise_power, s.sample_rate(), seed)?;
        for (o, v) in out.iter_mut().zip(n.samples()) {
            *o += v;
        }
    }
    Ok(s.with_samples(out))
}

/// Friis cascade noise factor of stages in signal order.
pub fn cascade_noise_factor(stages: &[StageSpec]) -> f64 {
    let mut f = 1.0;
    let mut g = 1.0;
    for st in stages {
        f += (st.noise_factor() - 1.0) / g;
        g *= st.power_gain();
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impairments::pa::two_tone_test;
    use crate::linkbudget::nl_power;
    use crate::signal::{measure_power, watts_to_dbm};

    const FS: f64 = 64e6;

    #[test]
    fn transparent_stage() {
        let s = awgn(128, 1.0, FS, 1).unwrap();
        let out = apply_stage(&s, &StageSpec::linear(0.0, 0.0), 1e-3, 9).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn three_db_nf_adds_one_floor() {
        let p_th = 1e-12;
        let z = ComplexSignal::zeros(1_000_000, FS).unwrap();
        let out = apply_stage(&z, &StageSpec::linear(0.0, 10.0 * 2f64.log10()), p_th, 4).unwrap();
        let p = measure_power(&out).unwrap();
        assert!((p / p_th - 1.0).abs() < 0.01, "{}", p / p_th);
    }

    #[test]
    fn rejects_negative_nf() {
        let z = ComplexSignal::zeros(4, FS).unwrap();
        assert!(apply_stage(&z, &StageSpec::linear(0.0, -1.0), 1.0, 0).is_err());
    }

    #[test]
    fn two_tone_products_follow_intercepts() {
        // same two-tone oracle as the PA, via an equivalent PH model for c3
        // and direct DFT bins for IM2
        let spec = StageSpec {
            gain_db: 25.0,
            noise_figure_db: 0.0,
            iip2_dbm: Some(43.0),
            iip3_dbm: Some(-9.0),
        };
        let (c2, c3) = spec.coefficients();
        let a = spec.power_gain().sqrt();
        let m = crate::impairments::pa::PhModel::new(vec![
            vec![Complex64::new(a, 0.0)],
            vec![Complex64::new(a * c3, 0.0)],
        ])
        .unwrap();
        for p_in in [-40.0, -30.0, -24.0] {
            let tt = two_tone_test(&m, p_in);
            let want = nl_power(p_in + 25.0, p_in, -9.0, 3);
            assert!((tt.im3_dbm - want).abs() < 1.0, "{} vs {want}", tt.im3_dbm);
        }

        // IM2 at f1 - f2 from a direct stage run
        let n = 1024usize;
        let p_in = -30.0;
        let amp = dbm_to_watts(PowerDbm(p_in)).sqrt();
        let x: Vec<Complex64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                Complex64::from_polar(amp, 2.0 * std::f64::consts::PI * 40.0 * t)
                    + Complex64::from_polar(amp, 2.0 * std::f64::consts::PI * 48.0 * t)
            })
            .collect();
        let s = ComplexSignal::new(x, FS).unwrap();
        let y = apply_stage(&s, &spec, 0.0, 0).unwrap();
        let spec_y = crate::signal::spectrum(&y);
        let im2 = spec_y[n - 8].norm_sqr() / (n * n) as f64;
        let want = nl_power(p_in + 25.0, p_in, 43.0, 2);
        assert!((watts_to_dbm(im2) - want).abs() < 1.0);
        assert!(c2 > 0.0);
    }

    #[test]
    fn table_receiver_cascade_is_4_1_db() {
        let stages = [
            StageSpec::linear(25.0, 4.1),
            StageSpec::linear(6.0, 4.0),
            StageSpec::linear(40.0, 4.0),
        ];
        let nf = 10.0 * cascade_noise_factor(&stages).log10();
        assert!((nf - 4.1).abs() < 0.3, "{nf}");
    }
}
