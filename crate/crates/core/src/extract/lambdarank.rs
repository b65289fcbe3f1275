use super::ndcg::{discount, ideal_dcg};
use crate::classify::loss::{sigmoid, softplus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaLoss {
    pub loss: f64,
    /// ∂loss/∂s for every item in the list.
    pub grad: Vec<f64>,
}

/// Positions of items when sorted by descending score, ties by index.
pub fn predicted_positions(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut pos = vec![0; scores.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    pos
}

/// Every (i, j) with label_i = 1 and label_j = 0.
pub fn all_pairs(labels: &[u8]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li > lj {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// |NDCG@k change| from swapping the items at positions `pi` and `pj`.
pub fn delta_ndcg(gain_i: f64, gain_j: f64, pi: usize, pj: usize, k: usize, idcg: f64) -> f64 {
    let d = |p: usize| if p < k { discount(p) } else { 0.0 };
    ((gain_i - gain_j) * (d(pi) - d(pj))).abs() / idcg
}

/// Sum over pairs of ln(1 + exp(−σ(s_i − s_j))) · |ΔNDCG_ij|, where ΔNDCG is
/// taken at cutoff `k` in the ordering induced by the current scores and held
/// constant for differentiation.
pub fn lambdarank_loss(pairs: &[(usize, usize)], scores: &[f64], labels: &[u8], k: usize, sigma: f64) -> Result<LambdaLoss> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if k == 0 {
        return Err(Error::invalid("cutoff k must be positive"));
    }
    let k = k.min(scores.len());
    let pos = predicted_positions(scores);
    let idcg = ideal_dcg(labels, k);
    let mut loss = 0.0;
    let mut grad = vec![0.0; scores.len()];
    for &(i, j) in pairs {
        if i >= scores.len() || j >= scores.len() {
            return Err(Error::invalid(format!("pair ({i}, {j}) out of range")));
        }
        if labels[i] <= labels[j] {
            return Err(Error::invalid(format!(
                "pair ({i}, {j}) must have label_i > label_j, got {} and {}",
                labels[i], labels[j]
            )));
        }
        let delta = delta_ndcg(labels[i] as f64, labels[j] as f64, pos[i], pos[j], k, idcg);
        let diff = sigma * (scores[i] - scores[j]);
        loss += softplus(-diff) * delta;
        // d/ds_i softplus(−σ(s_i − s_j)) = −σ · sigmoid(−σ(s_i − s_j))
        let lambda = sigma * sigmoid(-diff) * delta;
        grad[i] -= lambda;
        grad[j] += lambda;
    }
    Ok(LambdaLoss { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::ndcg::ndcg;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn swap_oracle(scores: &[f64], labels: &[u8], i: usize, j: usize, k: usize) -> f64 {
        let pos = predicted_positions(scores);
        let mut ranked = vec![0u8; labels.len()];
        for (item, &p) in pos.iter().enumerate() {
            ranked[p] = labels[item];
        }
        let before = ndcg(&ranked, k);
        ranked.swap(pos[i], pos[j]);
        (ndcg(&ranked, k) - before).abs()
    }

    #[test]
    fn asymptotes() {
        let l = lambdarank_loss(&[(0, 1)], &[1e6, 0.0], &[1, 0], 2, 1.0).unwrap();
        assert!(l.loss < 1e-12);
        // Equal scores: ties order by index, so item 0 is already first and the
        // swap changes NDCG by 1 − 1/log2(3).
        let l = lambdarank_loss(&[(1, 0)], &[0.5, 0.5], &[0, 1], 2, 1.0).unwrap();
        let delta = 1.0 - 1.0 / 3f64.log2();
        assert!((l.loss - 2f64.ln() * delta).abs() < 1e-15);
    }

    #[test]
    fn hand_three_item_example() {
        // labels [1,0,0], scores [0.2, 0.9, 0.4] -> order: item1, item2, item0
        let scores = [0.2, 0.9, 0.4];
        let labels = [1, 0, 0];
        let k = 3;
        let out = lambdarank_loss(&all_pairs(&labels), &scores, &labels, k, 1.0).unwrap();
        let d = |p: usize| 1.0 / ((p + 2) as f64).log2();
        // positive item0 sits at position 2; negatives at 0 (item1) and 1 (item2)
        let delta01 = (d(2) - d(0)).abs();
        let delta02 = (d(2) - d(1)).abs();
        let expected = (1.0 + (-(0.2f64 - 0.9)).exp()).ln() * delta01 + (1.0 + (-(0.2f64 - 0.4)).exp()).ln() * delta02;
        assert!((out.loss - expected).abs() < 1e-14);
        assert!((delta01 - swap_oracle(&scores, &labels, 0, 1, k)).abs() < 1e-15);
        assert!((delta02 - swap_oracle(&scores, &labels, 0, 2, k)).abs() < 1e-15);
    }

    #[test]
    fn equal_labels_rejected() {
        assert!(lambdarank_loss(&[(0, 1)], &[0.0, 1.0], &[1, 1], 2, 1.0).is_err());
        assert!(lambdarank_loss(&[(0, 1)], &[0.0, 1.0], &[0, 1], 2, 1.0).is_err());
    }

    #[test]
    fn delta_matches_swap_oracle_and_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let n = rng.random_range(3..9);
            let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.4))).collect();
            labels[0] = 1;
            labels[1] = 0;
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let k = rng.random_range(1..=n);
            let pairs = all_pairs(&labels);
            let out = lambdarank_loss(&pairs, &scores, &labels, k, 1.0).unwrap();
            let pos = predicted_positions(&scores);
            let idcg = ideal_dcg(&labels, k);
            for &(i, j) in &pairs {
                let closed = delta_ndcg(1.0, 0.0, pos[i], pos[j], k, idcg);
                assert!((closed - swap_oracle(&scores, &labels, i, j, k)).abs() < 1e-12);
            }
            let h = 1e-6;
            for t in 0..n {
                let f = |delta: f64| {
                    let mut s = scores.clone();
                    s[t] += delta;
                    lambdarank_loss(&pairs, &s, &labels, k, 1.0).unwrap().loss
                };
                let fd = (f(h) - f(-h)) / (2.0 * h);
                let an = out.grad[t];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
                assert!(rel < 1e-4 || (fd - an).abs() < 1e-10, "fd={fd} an={an}");
            }
        }
    }

    #[test]
    fn raising_misordered_positive_lowers_loss() {
        let labels = [1, 0, 0, 1];
        let scores = [0.1, 0.8, 0.5, 0.3];
        let pairs = all_pairs(&labels);
        let base = lambdarank_loss(&pairs, &scores, &labels, 4, 1.0).unwrap().loss;
        let mut bumped = scores;
        bumped[0] += 0.05;
        assert!(lambdarank_loss(&pairs, &bumped, &labels, 4, 1.0).unwrap().loss < base);
    }
}
