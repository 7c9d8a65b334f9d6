//! Rank statistics: average ranks with tie handling and Spearman correlation.

use super::ImageError;

/// Ranks of a list of values, 1-based, with ties sharing their average rank.
///
/// For `n` entries the ranks always sum to `n(n+1)/2`; a vector that violates
/// this cannot have come from a ranking and is rejected on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    ranks: Vec<f64>,
}

impl RankVector {
    /// Wraps externally supplied ranks, validating the rank-sum invariant.
    pub fn new(ranks: Vec<f64>) -> Result<Self, ImageError> {
        if ranks.is_empty() {
            return Err(ImageError::EmptyInput);
        }
        let n = ranks.len() as f64;
        if let Some(&bad) = ranks.iter().find(|r| !(1.0..=n).contains(*r)) {
            return Err(ImageError::InvalidRanks(format!(
                "rank {bad} outside [1, {n}]"
            )));
        }
        let sum: f64 = ranks.iter().sum();
        let expected = n * (n + 1.0) / 2.0;
        if (sum - expected).abs() > 1e-9 {
            return Err(ImageError::InvalidRanks(format!(
                "ranks sum to {sum}, expected {expected}"
            )));
        }
        Ok(RankVector { ranks })
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

/// Ranks `values` ascending (rank 1 = smallest); tied values all receive the
/// average of the positions they occupy.
pub fn average_ranks(values: &[f64]) -> Result<RankVector, ImageError> {
    if values.is_empty() {
        return Err(ImageError::EmptyInput);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end are 0-based; their 1-based average is
        // (start + 1 + end) / 2.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    Ok(RankVector { ranks })
}

/// Spearman rank correlation: the Pearson correlation of two rank vectors.
///
/// Errors with [`ImageError::LengthMismatch`] on unequal lengths and
/// [`ImageError::DegenerateInput`] if either vector has zero variance (which
/// includes any vector of fewer than two entries).
pub fn spearman(x: &RankVector, y: &RankVector) -> Result<f64, ImageError> {
    if x.len() != y.len() {
        return Err(ImageError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len() as f64;
    let mean_x: f64 = x.ranks.iter().sum::<f64>() / n;
    let mean_y: f64 = y.ranks.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.ranks.iter().zip(&y.ranks) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ImageError::DegenerateInput);
    }
    Ok(sxy / (sxx * syy).sqrt())
}
