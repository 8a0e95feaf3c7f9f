//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped; tied absolute differences get mid-ranks.
//! For up to [`EXACT_LIMIT`] non-zero differences the two-sided p-value is
//! exact under the sign-flip null (ties included), computed by dynamic
//! programming over doubled rank sums. Larger samples use the normal
//! approximation with tie correction.

use serde::{Deserialize, Serialize};

pub const EXACT_LIMIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRankResult {
    /// Number of non-zero differences.
    pub n: usize,
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Mid-ranks (1-based) of `values`.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided signed-rank test on paired differences.
pub fn signed_rank_test(differences: &[f64]) -> SignedRankResult {
    let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return SignedRankResult {
            n,
            w_plus: 0.0,
            p_value: 1.0,
            exact: true,
        };
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = mid_ranks(&abs);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    if n <= EXACT_LIMIT {
        let p_value = exact_two_sided(&ranks, w_plus);
        SignedRankResult {
            n,
            w_plus,
            p_value,
            exact: true,
        }
    } else {
        SignedRankResult {
            n,
            w_plus,
            p_value: normal_two_sided(&ranks, w_plus),
            exact: false,
        }
    }
}

fn exact_two_sided(ranks: &[f64], w_plus: f64) -> f64 {
    // Mid-ranks are multiples of 1/2, so doubled ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut dist = vec![0.0f64; total + 1];
    dist[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let p = dist[s];
            if p != 0.0 {
                dist[s + r] += p * 0.5;
                dist[s] = p * 0.5;
            }
        }
        reach += r;
    }
    let observed = (w_plus * 2.0).round() as usize;
    let lower: f64 = dist[..=observed].iter().sum();
    let upper: f64 = dist[observed..].iter().sum();
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_two_sided(ranks: &[f64], w_plus: f64) -> f64 {
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let var = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
    if var == 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean).abs() / var.sqrt();
    (2.0 * standard_normal_sf(z)).min(1.0)
}

fn standard_normal_sf(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().sf(z)
}
