use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::signal::{convolve_causal, db_to_lin, stream_rng, ComplexSignal};

/// Rician self-interference channel: one real LOS tap followed by diffuse taps.
#[derive(Debug, Clone, PartialEq)]
pub struct SiChannel {
    taps: Vec<Complex64>,
    k_factor_db: f64,
    total_gain_db: f64,
}

impl SiChannel {
    pub fn from_taps(taps: Vec<Complex64>, k_factor_db: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("taps", "channel needs at least one tap"));
        }
        let total: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        Ok(Self {
            taps,
            k_factor_db,
            total_gain_db: 10.0 * total.log10(),
        })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn los(&self) -> Complex64 {
        self.taps[0]
    }

    pub fn k_factor_db(&self) -> f64 {
        self.k_factor_db
    }

    pub fn total_gain_db(&self) -> f64 {
        self.total_gain_db
    }

    pub fn total_gain(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// True for the zero channel of infinite antenna separation.
    pub fn is_disconnected(&self) -> bool {
        self.taps.iter().all(|t| t.norm() == 0.0)
    }

    pub fn los_power(&self) -> f64 {
        self.taps[0].norm_sqr()
    }

    pub fn diffuse_power(&self) -> f64 {
        self.taps[1..].iter().map(|t| t.norm_sqr()).sum()
    }

    pub fn apply(&self, s: &ComplexSignal) -> ComplexSignal {
        s.with_samples(convolve_causal(&self.taps, s.samples()))
    }
}

/// Draws a channel with a 3 dB/tap diffuse decay.
pub fn draw_si_channel(k_factor_db: f64, antenna_separation_db: f64, n_diffuse_taps: usize, seed: u64) -> Result<SiChannel> {
    draw_si_channel_with_decay(k_factor_db, antenna_separation_db, n_diffuse_taps, 3.0, seed)
}

pub fn draw_si_channel_with_decay(
    k_factor_db: f64,
    antenna_separation_db: f64,
    n_diffuse_taps: usize,
    decay_db_per_tap: f64,
    seed: u64,
) -> Result<SiChannel> {
    if n_diffuse_taps == 0 {
        return Err(invalid("n_diffuse_taps", "need at least one diffuse tap"));
    }
    if k_factor_db.is_nan() || k_factor_db == f64::NEG_INFINITY {
        return Err(invalid("k_factor_db", "must be finite or +inf"));
    }
    if antenna_separation_db.is_nan() || antenna_separation_db == f64::NEG_INFINITY {
        return Err(invalid("antenna_separation_db", "must be finite or +inf"));
    }
    if !(decay_db_per_tap.is_finite() && decay_db_per_tap >= 0.0) {
        return Err(invalid("decay_db_per_tap", "must be finite and >= 0"));
    }
    let total = db_to_lin(-antenna_separation_db);
    if k_factor_db == f64::INFINITY {
        return SiChannel::from_taps(vec![Complex64::new(total.sqrt(), 0.0)], k_factor_db);
    }

    let profile: Vec<f64> = (0..n_diffuse_taps)
        .map(|k| db_to_lin(-decay_db_per_tap * k as f64))
        .collect();
    let profile_sum: f64 = profile.iter().sum();
    let diffuse_total = 1.0 / db_to_lin(k_factor_db);
    let mut rng = stream_rng(seed, 0x5c4a);
    let mut taps = vec![Complex64::new(1.0, 0.0)];
    for p in profile {
        let var = diffuse_total * p / profile_sum;
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        taps.push(Complex64::new(re, im) * (var / 2.0).sqrt());
    }
    let norm = (total / taps.iter().map(|t| t.norm_sqr()).sum::<f64>()).sqrt();
    taps.iter_mut().for_each(|t| *t *= norm);
    SiChannel::from_taps(taps, k_factor_db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_los() {
        let c = draw_si_channel(f64::INFINITY, 40.0, 7, 1).unwrap();
        assert_eq!(c.taps().len(), 1);
        assert!((c.total_gain() - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn infinite_separation_is_disconnected() {
        let c = draw_si_channel(35.8, f64::INFINITY, 7, 1).unwrap();
        assert!(c.is_disconnected());
    }

    #[test]
    fn normalization_is_exact_per_draw() {
        for seed in 0..20 {
            let c = draw_si_channel(35.8, 40.0, 7, seed).unwrap();
            assert_eq!(c.taps().len(), 8);
            assert!((c.total_gain_db() + 40.0).abs() < 1e-9);
            assert!(c.los().im == 0.0 && c.los().re > 0.0);
        }
    }

    #[test]
    fn zero_db_k_splits_evenly() {
        let (mut los, mut dif) = (0.0, 0.0);
        for seed in 0..2000 {
            // before normalization the split is 1 : 1/K in expectation
            let c = draw_si_channel(0.0, 0.0, 1, seed).unwrap();
            let scale = 1.0 / c.los_power();
            los += 1.0;
            dif += c.diffuse_power() * scale;
        }
        let k = 10.0 * (los / dif).log10();
        assert!(k.abs() < 0.5, "{k}");
    }

    #[test]
    fn rejects_zero_diffuse_taps() {
        assert!(draw_si_channel(35.8, 40.0, 0, 0).is_err());
    }
}
