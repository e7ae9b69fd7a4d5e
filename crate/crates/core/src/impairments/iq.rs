use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::signal::{convolve_causal, ComplexSignal};

/// Direct and conjugate impulse responses of a widely-linear system
/// `y = g1 * x + g2 * conj(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WidelyLinearResponse {
    direct: Vec<Complex64>,
    conjugate: Vec<Complex64>,
}

impl WidelyLinearResponse {
    pub fn new(direct: Vec<Complex64>, conjugate: Vec<Complex64>) -> Result<Self> {
        if direct.is_empty() || conjugate.is_empty() {
            return Err(invalid("response", "direct and conjugate responses need at least one tap"));
        }
        Ok(Self { direct, conjugate })
    }

    pub fn ideal() -> Self {
        Self {
            direct: vec![Complex64::new(1.0, 0.0)],
            conjugate: vec![Complex64::new(0.0, 0.0)],
        }
    }

    pub fn direct(&self) -> &[Complex64] {
        &self.direct
    }

    pub fn conjugate(&self) -> &[Complex64] {
        &self.conjugate
    }

    /// `10 log10(|G1(f)|^2 / |G2(f)|^2)` at normalized frequency `f` (cycles/sample).
    pub fn irr_at(&self, f: f64) -> f64 {
        let g1 = dtft(&self.direct, f).norm_sqr();
        let g2 = dtft(&self.conjugate, f).norm_sqr();
        if g2 == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (g1 / g2).log10()
        }
    }

    /// Image rejection of a frequency-flat response.
    pub fn irr_db(&self) -> f64 {
        self.irr_at(0.0)
    }
}

fn dtft(taps: &[Complex64], f: f64) -> Complex64 {
    taps.iter()
        .enumerate()
        .map(|(k, t)| t * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * k as f64))
        .sum()
}

/// Single-tap response with unit direct gain and an image `irr_db` below it.
/// `irr_db = +inf` gives the ideal mixer.
pub fn irr_to_response(irr_db: f64, image_phase: f64) -> Result<WidelyLinearResponse> {
    if irr_db.is_nan() || irr_db == f64::NEG_INFINITY {
        return Err(invalid("irr", format!("IRR must be finite or +inf, got {irr_db}")));
    }
    let g2 = if irr_db == f64::INFINITY {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::from_polar(10f64.powf(-irr_db / 20.0), image_phase)
    };
    WidelyLinearResponse::new(vec![Complex64::new(1.0, 0.0)], vec![g2])
}

pub fn apply_iq_imbalance(s: &ComplexSignal, r: &WidelyLinearResponse) -> ComplexSignal {
    let x = s.samples();
    let xc: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
    let a = convolve_causal(&r.direct, x);
    let b = convolve_causal(&r.conjugate, &xc);
    s.with_samples(a.into_iter().zip(b).map(|(p, q)| p + q).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::spectrum;
    use std::f64::consts::PI;

    fn tone(n: usize, bin: i64) -> ComplexSignal {
        ComplexSignal::new(
            (0..n)
                .map(|i| Complex64::from_polar(1.0, 2.0 * PI * bin as f64 * i as f64 / n as f64))
                .collect(),
            64e6,
        )
        .unwrap()
    }

    #[test]
    fn ideal_and_pure_image() {
        let s = tone(64, 3);
        assert_eq!(apply_iq_imbalance(&s, &WidelyLinearResponse::ideal()), s);
        let img = WidelyLinearResponse::new(vec![Complex64::new(0.0, 0.0)], vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(apply_iq_imbalance(&s, &img), s.conj());
    }

    #[test]
    fn irr_to_response_examples() {
        let r = irr_to_response(30.0, 0.0).unwrap();
        assert!((r.conjugate()[0] - Complex64::new(10f64.powf(-1.5), 0.0)).norm() < 1e-15);
        assert!((r.conjugate()[0].re - 0.0316).abs() < 1e-4);
        assert!((r.irr_db() - 30.0).abs() < 1e-12);
        assert_eq!(irr_to_response(f64::INFINITY, 1.0).unwrap().conjugate()[0].norm(), 0.0);
        assert!((irr_to_response(0.0, 0.4).unwrap().conjugate()[0].norm() - 1.0).abs() < 1e-15);
        assert!(irr_to_response(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn image_tone_sits_irr_below_direct() {
        let n = 1024;
        let k = 37;
        let r = irr_to_response(30.0, 0.7).unwrap();
        let y = apply_iq_imbalance(&tone(n, k), &r);
        let spec = spectrum(&y);
        let direct = spec[k as usize].norm_sqr();
        let image = spec[n - k as usize].norm_sqr();
        let measured = 10.0 * (direct / image).log10();
        assert!((measured - 30.0).abs() < 0.1, "{measured}");
    }
}
