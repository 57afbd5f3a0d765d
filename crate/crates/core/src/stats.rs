//! Wilcoxon rank-sum and signed-rank tests, one-sided (first sample or
//! first pair member smaller), plus small summary helpers.
//!
//! Both tests use the normal approximation with tie-corrected variance and
//! a continuity correction of 0.5. Exact enumeration is available for small
//! samples.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Per-model significance level for the rank-sum test.
pub const ALPHA_RANK_SUM: f64 = 0.05;
/// Across-model significance level for the signed-rank test.
pub const ALPHA_SIGNED_RANK: f64 = 0.01;

/// Smallest sample accepted by the rank-sum approximation.
pub const MIN_RANK_SUM_SAMPLE: usize = 5;
/// Fewest non-zero differences accepted by the signed-rank approximation.
pub const MIN_SIGNED_RANK_PAIRS: usize = 6;
/// Largest pooled size for exact enumeration.
pub const MAX_EXACT: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample of size {got} is too small for the normal approximation (need {needed}); use the exact test")]
    TooSmall { needed: usize, got: usize },
    #[error("all paired differences are zero; the test carries no information")]
    NoInformation,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("exact enumeration limited to {MAX_EXACT} observations, got {0}")]
    TooLargeForExact(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    /// Mann-Whitney U of the first sample, or R+ for the signed-rank test.
    pub statistic: f64,
    /// One-sided p-value for "first is smaller".
    pub p_value: f64,
    pub z: f64,
    /// Signed-rank only.
    pub r_plus: Option<f64>,
    pub r_minus: Option<f64>,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Ranks starting at 1, ties sharing their average rank. Also returns
/// `Σ (t³ − t)` over tie groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

fn lower_tail(stat: f64, mean: f64, var: f64) -> (f64, f64) {
    if var <= 0.0 {
        return (0.0, 1.0);
    }
    let z = (stat - mean + 0.5) / var.sqrt();
    let p = Normal::new(0.0, 1.0).expect("standard normal").cdf(z);
    (z, p.clamp(0.0, 1.0))
}

/// Rank-sum test of H₁: `a` tends to be smaller than `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    check_finite(a)?;
    check_finite(b)?;
    for s in [a, b] {
        if s.len() < MIN_RANK_SUM_SAMPLE {
            return Err(StatsError::TooSmall { needed: MIN_RANK_SUM_SAMPLE, got: s.len() });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = average_ranks(&pooled);
    let w: f64 = ranks[..a.len()].iter().sum();
    let u = w - na * (na + 1.0) / 2.0;
    let n = na + nb;
    let mean = na * nb / 2.0;
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let (z, p_value) = lower_tail(u, mean, var);
    Ok(TestResult { statistic: u, p_value, z, r_plus: None, r_minus: None })
}

/// Exact one-sided p-value of the rank-sum test by enumerating every way
/// to split the pooled ranks.
pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check_finite(a)?;
    check_finite(b)?;
    let n = a.len() + b.len();
    if n > MAX_EXACT {
        return Err(StatsError::TooLargeForExact(n));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = average_ranks(&pooled);
    let observed: f64 = ranks[..a.len()].iter().sum();
    let (mut hits, mut total) = (0u64, 0u64);
    fn walk(ranks: &[f64], start: usize, left: usize, sum: f64, observed: f64, hits: &mut u64, total: &mut u64) {
        if left == 0 {
            *total += 1;
            if sum <= observed + 1e-9 {
                *hits += 1;
            }
            return;
        }
        for i in start..=ranks.len() - left {
            walk(ranks, i + 1, left - 1, sum + ranks[i], observed, hits, total);
        }
    }
    walk(&ranks, 0, a.len(), 0.0, observed, &mut hits, &mut total);
    Ok(hits as f64 / total as f64)
}

fn nonzero_differences(pairs: &[(f64, f64)]) -> Result<Vec<f64>, StatsError> {
    for &(x, y) in pairs {
        check_finite(&[x, y])?;
    }
    let diffs: Vec<f64> = pairs.iter().map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(StatsError::NoInformation);
    }
    Ok(diffs)
}

/// Signed-rank test over pairs `(x, y)` of H₁: `x` tends to be smaller.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<TestResult, StatsError> {
    let diffs = nonzero_differences(pairs)?;
    if diffs.len() < MIN_SIGNED_RANK_PAIRS {
        return Err(StatsError::TooSmall { needed: MIN_SIGNED_RANK_PAIRS, got: diffs.len() });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let r_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum::<f64>() + 0.0;
    let r_minus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum::<f64>() + 0.0;
    let n = diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    let (z, p_value) = lower_tail(r_plus, mean, var);
    Ok(TestResult { statistic: r_plus, p_value, z, r_plus: Some(r_plus), r_minus: Some(r_minus) })
}

/// Exact one-sided p-value of the signed-rank test over all sign vectors.
pub fn signed_rank_exact(pairs: &[(f64, f64)]) -> Result<f64, StatsError> {
    let diffs = nonzero_differences(pairs)?;
    if diffs.len() > MAX_EXACT {
        return Err(StatsError::TooLargeForExact(diffs.len()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, _) = average_ranks(&abs);
    let observed: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    // Sums of all subsets of ranks, built incrementally.
    let mut sums = vec![0.0f64];
    for &r in &ranks {
        let extended: Vec<f64> = sums.iter().map(|s| s + r).collect();
        sums.extend(extended);
    }
    let hits = sums.iter().filter(|&&s| s <= observed + 1e-9).count();
    Ok(hits as f64 / sums.len() as f64)
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

/// Relative reduction of the adapted median against the original, in percent.
pub fn speedup_percent(adapted_median: f64, original_median: f64) -> f64 {
    (original_median - adapted_median) / original_median * 100.0
}
