//! Zipf-distributed integers via an inverse-CDF table.

use rand::Rng;

/// Values `1..=m` with probability proportional to `1 / rank^skew`.
#[derive(Clone, Debug)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(m: u32, skew: f64) -> Zipf {
        assert!(m >= 1, "empty value range");
        let weights: Vec<f64> = (1..=m).map(|r| (r as f64).powf(-skew)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        Zipf { cdf }
    }

    /// Probability of value `v` (1-based).
    pub fn mass(&self, v: u32) -> f64 {
        let i = v as usize - 1;
        self.cdf[i] - if i == 0 { 0.0 } else { self.cdf[i - 1] }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1) as u32 + 1
    }
}
