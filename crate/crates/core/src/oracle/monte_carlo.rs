//! Monte Carlo sampling of the net photon-momentum transfer: a Poisson
//! number of absorptions, each kicking by ±1 photon momentum with equal
//! probability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};

use crate::coefficients::prob_k;
use crate::error::{Error, Result};

/// "KDTLI" in ASCII.
pub const DEFAULT_SEED: u64 = 0x4B_44_54_4C_49;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
/// Bins are compared individually while their expected count is at least
/// this; rarer outcomes are pooled into one tail bin.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub nbar: f64,
    pub samples: u64,
    pub seed: u64,
    offset: i64,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn count(&self, k: i64) -> u64 {
        let idx = k + self.offset;
        if idx < 0 {
            return 0;
        }
        self.counts.get(idx as usize).copied().unwrap_or(0)
    }

    pub fn frequency(&self, k: i64) -> f64 {
        self.count(k) as f64 / self.samples as f64
    }

    /// Smallest and largest observed `k`.
    pub fn support(&self) -> (i64, i64) {
        let lo = self.counts.iter().position(|&c| c > 0).unwrap_or(0) as i64 - self.offset;
        let hi = self.counts.iter().rposition(|&c| c > 0).unwrap_or(0) as i64 - self.offset;
        (lo, hi)
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as i64 - self.offset) as f64 * c as f64)
            .sum();
        total / self.samples as f64
    }
}

pub fn mc_prob_k(nbar: f64, samples: u64, seed: u64) -> Result<Histogram> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::domain(format!("mean photon number must be nonnegative, got {nbar}")));
    }
    if samples == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one sample"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let poisson = if nbar > 0.0 {
        Some(Poisson::new(nbar).map_err(|e| Error::domain(e.to_string()))?)
    } else {
        None
    };
    let offset: i64 = 256;
    let mut counts = vec![0_u64; 2 * offset as usize + 1];
    for _ in 0..samples {
        let n = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
        let k = random_walk(n, &mut rng);
        let idx = (k + offset).clamp(0, 2 * offset) as usize;
        counts[idx] += 1;
    }
    Ok(Histogram { nbar, samples, seed, offset, counts })
}

/// Net displacement of `n` fair ±1 steps, one random bit per step.
fn random_walk<R: Rng>(n: u64, rng: &mut R) -> i64 {
    let mut remaining = n;
    let mut ups = 0_u64;
    while remaining > 0 {
        let take = remaining.min(64);
        let bits: u64 = rng.random();
        let mask = if take == 64 { u64::MAX } else { (1_u64 << take) - 1 };
        ups += (bits & mask).count_ones() as u64;
        remaining -= take;
    }
    2 * ups as i64 - n as i64
}

/// Comparison of a histogram with `e^{-n̄} I_k(n̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramCheck {
    /// Largest `|observed - expected| / SE` over compared bins.
    pub max_z: f64,
    /// `|mean k| / SE(mean)`.
    pub mean_z: f64,
    pub bins: usize,
}

impl HistogramCheck {
    pub fn within(&self, z: f64) -> bool {
        self.max_z <= z && self.mean_z <= z
    }
}

pub fn compare_with_closed_form(h: &Histogram) -> HistogramCheck {
    let n = h.samples as f64;
    let mut max_z: f64 = 0.0;
    let mut bins = 0;
    let mut k_edge = 0_i64;
    while n * prob_k(k_edge as i32, h.nbar) >= MIN_EXPECTED {
        k_edge += 1;
    }
    // Individual bins |k| < k_edge, then the pooled tail |k| ≥ k_edge.
    let z_score = |p: f64, observed: f64| {
        let se = (p * (1.0 - p) / n).sqrt();
        if se == 0.0 {
            if (observed - p).abs() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (observed - p).abs() / se
        }
    };
    let mut tail_p = 1.0;
    let mut inner_freq = 0.0;
    for k in (1 - k_edge.max(1))..k_edge.max(1) {
        let p = prob_k(k as i32, h.nbar);
        let f = h.frequency(k);
        tail_p -= p;
        inner_freq += f;
        max_z = max_z.max(z_score(p, f));
        bins += 1;
    }
    let tail_p = tail_p.max(0.0);
    max_z = max_z.max(z_score(tail_p, 1.0 - inner_freq));
    bins += 1;

    // Var(k) = n̄ for the Poisson walk.
    let se_mean = (h.nbar / n).sqrt();
    let mean_z = match (se_mean == 0.0, h.mean() == 0.0) {
        (false, _) => h.mean().abs() / se_mean,
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
    };
    HistogramCheck { max_z, mean_z, bins }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_number_gives_no_kicks() {
        let h = mc_prob_k(0.0, 1000, DEFAULT_SEED).unwrap();
        assert_eq!(h.count(0), 1000);
        assert_eq!(h.support(), (0, 0));
        let c = compare_with_closed_form(&h);
        assert_eq!(c.max_z, 0.0);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = mc_prob_k(2.0, 10_000, 7).unwrap();
        let b = mc_prob_k(2.0, 10_000, 7).unwrap();
        let c = mc_prob_k(2.0, 10_000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn walk_parity_matches_step_count() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for n in [0, 1, 2, 63, 64, 65, 130] {
            let k = random_walk(n, &mut rng);
            assert!(k.abs() <= n as i64);
            assert_eq!((k + n as i64) % 2, 0);
        }
    }

    #[test]
    fn histogram_matches_closed_form() {
        let h = mc_prob_k(2.0, 200_000, DEFAULT_SEED).unwrap();
        let c = compare_with_closed_form(&h);
        assert!(c.within(3.0), "{c:?}");
        assert!(c.bins > 5);
    }
}
