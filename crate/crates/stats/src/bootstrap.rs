//! Nonparametric percentile bootstrap of the mean.
//!
//! The plain percentile interval is too narrow for small samples (about 92%
//! actual coverage for a nominal 95% at n = 16). The default
//! [`CiMethod::ExpandedPercentile`] widens the quantile levels following
//! Hesterberg (2015): the tail probability becomes
//! `Φ(-sqrt(n/(n-1)) · t_{n-1}(1-α/2))`. Endpoints are still quantiles of
//! the resampled means, so they stay inside the data range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    Percentile,
    #[default]
    ExpandedPercentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
    /// Two-sided coverage, e.g. 0.95.
    pub level: f64,
    pub method: CiMethod,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 10_000,
            seed: 0x0da9_57e7e0,
            level: 0.95,
            method: CiMethod::default(),
        }
    }
}

/// Lower tail probability at which the interval's low endpoint is read.
pub fn tail_probability(n: usize, level: f64, method: CiMethod) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
    let alpha = (1.0 - level) / 2.0;
    if method == CiMethod::Percentile || n < 2 {
        return alpha;
    }
    let df = (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, df)
        .expect("df > 0")
        .inverse_cdf(1.0 - alpha);
    Normal::standard().cdf(-(n as f64 / df).sqrt() * t)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linear-interpolation quantile (R type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile interval of resampled means. Resamples draw `values.len()`
/// indices with replacement from a generator seeded with `config.seed`.
/// Returns `None` for empty input.
pub fn percentile_ci(values: &[f64], config: &BootstrapConfig) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut means: Vec<f64> = (0..config.resamples.max(1))
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = tail_probability(n, config.level, config.method);
    Some((
        quantile_sorted(&means, alpha),
        quantile_sorted(&means, 1.0 - alpha),
    ))
}
