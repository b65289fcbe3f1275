/// Discount for 0-based rank `r`: 1 / log2(r + 2).
pub fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 2) as f64).log2()
}

fn dcg(labels: &[u8], k: usize) -> f64 {
    labels.iter().take(k).enumerate().map(|(r, &l)| l as f64 * discount(r)).sum()
}

/// Ideal DCG@k for binary labels.
pub fn ideal_dcg(labels: &[u8], k: usize) -> f64 {
    let positives = labels.iter().filter(|&&l| l > 0).count();
    (0..positives.min(k)).map(discount).sum()
}

/// NDCG@k of binary labels listed in predicted order. A list with no
/// positive labels scores 1.
pub fn ndcg(ranked_labels: &[u8], k: usize) -> f64 {
    let ideal = ideal_dcg(ranked_labels, k);
    if ideal == 0.0 {
        return 1.0;
    }
    dcg(ranked_labels, k) / ideal
}
