//! Evaluation arithmetic: ranking quality, sampling cost, improvement.
//!
//! Ranking quality is measured with nDCG over graded relevance levels. An
//! item's relevance is derived from how far its predicted rank sits from its
//! true rank, normalized by `n - 1`:
//!
//! | normalized distance | level |
//! |---------------------|-------|
//! | ≤ 0.10              | 5     |
//! | ≤ 0.25              | 4     |
//! | ≤ 0.55              | 3     |
//! | ≤ 0.90              | 2     |
//! | > 0.90              | 0     |
//!
//! DCG accumulates `(2^level - 1) / log2(i + 1)` over 1-based positions in
//! true-rank order; nDCG divides by the all-perfect ideal, so 1.0 means the
//! predicted ranking orders every item exactly where the true ranking does.

use crate::error::{Error, Result};

/// Relevance level of an item whose predicted rank is `predicted` and whose
/// true rank is `true_rank`, among `n` ranked items.
///
/// Panics if `n < 2` or either rank is outside `1..=n`; ranks are 1-based.
pub fn relevance(predicted: usize, true_rank: usize, n: usize) -> u32 {
    assert!(n >= 2, "relevance needs at least two ranked items");
    assert!(
        (1..=n).contains(&predicted) && (1..=n).contains(&true_rank),
        "ranks must lie in 1..={n}"
    );
    let d = (predicted as f64 - true_rank as f64).abs() / (n as f64 - 1.0);
    if d <= 0.10 {
        5
    } else if d <= 0.25 {
        4
    } else if d <= 0.55 {
        3
    } else if d <= 0.90 {
        2
    } else {
        0
    }
}

/// Discounted cumulative gain of a relevance sequence (1-based positions).
pub fn dcg(levels: &[u32]) -> f64 {
    levels
        .iter()
        .enumerate()
        .map(|(i, &rel)| {
            let gain = (1u64 << rel) as f64 - 1.0;
            gain / ((i + 2) as f64).log2()
        })
        .sum()
}

/// A predicted ranking paired with the true ranking of the same items.
///
/// `predicted[k]` and `true_ranks[k]` are the two ranks of item `k`; both
/// slices must be permutations of `1..=n` with `n >= 2`.
#[derive(Debug, Clone)]
pub struct RankingPair {
    predicted: Vec<usize>,
    true_ranks: Vec<usize>,
}

impl RankingPair {
    pub fn new(predicted: Vec<usize>, true_ranks: Vec<usize>) -> Result<Self> {
        if predicted.len() != true_ranks.len() {
            return Err(Error::DimensionMismatch {
                expected: true_ranks.len(),
                got: predicted.len(),
            });
        }
        let n = predicted.len();
        if n < 2 {
            return Err(Error::InvalidInput("a ranking needs at least two items".into()));
        }
        for ranks in [&predicted, &true_ranks] {
            let mut seen = vec![false; n + 1];
            for &r in ranks.iter() {
                if r < 1 || r > n || seen[r] {
                    return Err(Error::InvalidInput(format!(
                        "ranks must form a permutation of 1..={n}"
                    )));
                }
                seen[r] = true;
            }
        }
        Ok(RankingPair { predicted, true_ranks })
    }

    /// Build the pair from raw measurements of the same items on two
    /// systems: ranks are ascending by time, ties broken by earlier index.
    pub fn from_times(predicted_times: &[f64], true_times: &[f64]) -> Result<Self> {
        RankingPair::new(ranks_from_times(predicted_times), ranks_from_times(true_times))
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor enforces n >= 2
    }

    /// Relevance levels in true-rank position order (position i holds the
    /// item whose true rank is i+1).
    pub fn relevance_levels(&self) -> Vec<u32> {
        let n = self.len();
        let mut levels = vec![0u32; n];
        for (item, (&pred, &truth)) in self.predicted.iter().zip(&self.true_ranks).enumerate() {
            let _ = item;
            levels[truth - 1] = relevance(pred, truth, n);
        }
        levels
    }

    /// Normalized DCG of the predicted ranking against the true one.
    pub fn ndcg(&self) -> f64 {
        let levels = self.relevance_levels();
        let ideal: Vec<u32> = vec![5; levels.len()];
        dcg(&levels) / dcg(&ideal)
    }
}

/// 1-based ranks by ascending value; ties broken by earlier index.
pub fn ranks_from_times(times: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    let mut ranks = vec![0usize; times.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank + 1;
    }
    ranks
}

/// Cost of building a scaling model from `n` training samples whose held-out
/// error rate is `error_rate`, amortized over a prediction workload of
/// `prediction_set_size` queries with per-error cost ratio `cost_ratio`:
/// `2n + error_rate * prediction_set_size * cost_ratio`. The `2n` charges
/// one training and one held-out measurement per sample.
pub fn total_cost(n: usize, error_rate: f64, prediction_set_size: usize, cost_ratio: f64) -> f64 {
    2.0 * n as f64 + error_rate * prediction_set_size as f64 * cost_ratio
}

/// Percentage change of `evaluated` relative to `baseline`
/// (negative = faster than baseline).
pub fn improvement(evaluated: f64, baseline: f64) -> Result<f64> {
    if !(baseline.is_finite() && evaluated.is_finite()) || baseline <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "improvement needs finite times and a positive baseline, got {evaluated} vs {baseline}"
        )));
    }
    Ok((evaluated - baseline) / baseline * 100.0)
}
