use crate::kb::EntityRef;

/// 1-based position of the best-ranked gold answer, if any gold was ranked.
pub fn gold_rank(ranked: &[(EntityRef, f64)], golds: &[EntityRef]) -> Option<usize> {
    ranked.iter().position(|(e, _)| golds.contains(e)).map(|p| p + 1)
}

/// Mean of `1 / rank`, counting unranked questions as 0.
pub fn mrr(ranks: &[Option<usize>]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / ranks.len() as f64
}

/// Fraction of questions whose top prediction is a gold answer.
pub fn hits_at_1(ranks: &[Option<usize>]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().filter(|r| **r == Some(1)).count() as f64 / ranks.len() as f64
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
