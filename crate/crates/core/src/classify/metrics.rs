use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub paper_id: String,
    /// Predicted probability per label.
    pub x: Vec<f64>,
    /// Ground truth, one 0/1 entry per label.
    pub y: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub precision_at_k: f64,
    pub ndcg_at_k: f64,
    /// Label-averaged AUC; `None` when no label has both classes present.
    pub auc: Option<f64>,
}

/// Labels ordered by descending score, ties by ascending label index.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

fn dcg_discount(rank: usize) -> f64 {
    1.0 / ((rank + 2) as f64).log2()
}

/// Mann–Whitney AUC with average ranks for ties.
pub fn auc_rank_statistic(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Precision@k and NDCG@k averaged over records, and AUC computed per label
/// across records then averaged over labels with both classes present. All
/// values are in [0, 1].
pub fn evaluate(records: &[PredictionRecord], k: usize) -> Result<RankingMetrics> {
    if records.is_empty() {
        return Err(Error::Empty("prediction records"));
    }
    let n_labels = records[0].x.len();
    if k == 0 || k > n_labels {
        return Err(Error::invalid(format!("k={k} must be in 1..={n_labels}")));
    }
    for r in records {
        if r.x.len() != n_labels || r.y.len() != n_labels {
            return Err(Error::invalid(format!("record {} has mismatched vector lengths", r.paper_id)));
        }
        if r.y.iter().any(|&y| y > 1) {
            return Err(Error::invalid(format!("record {} has a non-binary label", r.paper_id)));
        }
    }
    let mut precision = 0.0;
    let mut ndcg = 0.0;
    for r in records {
        let order = ranking(&r.x);
        let hits: Vec<f64> = order[..k].iter().map(|&l| r.y[l] as f64).collect();
        precision += hits.iter().sum::<f64>() / k as f64;
        let dcg: f64 = hits.iter().enumerate().map(|(i, h)| h * dcg_discount(i)).sum();
        let positives = r.y.iter().filter(|&&y| y == 1).count().min(k);
        let idcg: f64 = (0..positives).map(dcg_discount).sum();
        ndcg += if idcg > 0.0 { dcg / idcg } else { 1.0 };
    }
    let n = records.len() as f64;
    let aucs: Vec<f64> = (0..n_labels)
        .filter_map(|l| {
            let scores: Vec<f64> = records.iter().map(|r| r.x[l]).collect();
            let labels: Vec<u8> = records.iter().map(|r| r.y[l]).collect();
            auc_rank_statistic(&scores, &labels)
        })
        .collect();
    Ok(RankingMetrics {
        precision_at_k: precision / n,
        ndcg_at_k: ndcg / n,
        auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
    })
}

/// Text table with the columns Pre.@3, Pre.@5, NDCG@3, NDCG@5, AUC (×100).
pub fn metrics_report(model_name: &str, records: &[PredictionRecord]) -> Result<String> {
    let m3 = evaluate(records, 3)?;
    let m5 = evaluate(records, 5)?;
    let auc = m3.auc.map_or_else(|| "n/a".to_owned(), |a| format!("{:.2}", a * 100.0));
    Ok(format!(
        "{:<16} {:>8} {:>8} {:>8} {:>8} {:>8}\n{:<16} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8}\n",
        "Model",
        "Pre.@3",
        "Pre.@5",
        "NDCG@3",
        "NDCG@5",
        "AUC",
        model_name,
        m3.precision_at_k * 100.0,
        m5.precision_at_k * 100.0,
        m3.ndcg_at_k * 100.0,
        m5.ndcg_at_k * 100.0,
        auc
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        (den > 0.0).then(|| num / den)
    }

    #[test]
    fn perfect_predictions() {
        let records: Vec<PredictionRecord> = (0..6)
            .map(|i| {
                let y: Vec<u8> = (0..22).map(|l| u8::from(l % 6 == i || l % 6 == (i + 1) % 6)).collect();
                let x = y.iter().map(|&v| if v == 1 { 0.9 } else { 0.1 }).collect();
                PredictionRecord { paper_id: i.to_string(), x, y }
            })
            .collect();
        let m = evaluate(&records, 3).unwrap();
        assert_eq!(m.ndcg_at_k, 1.0);
        assert_eq!(m.auc, Some(1.0));
        // at most 2·⌈22/6⌉ positives per record; precision@3 is perfect when ≥3 positives exist
        let m1 = evaluate(&records, 1).unwrap();
        assert_eq!(m1.precision_at_k, 1.0);
    }

    #[test]
    fn precision_hand_count() {
        let mut y = vec![0u8; 22];
        y[0] = 1;
        y[2] = 1;
        let mut x = vec![0.0; 22];
        x[2] = 0.9;
        x[0] = 0.8;
        x[1] = 0.7;
        let m = evaluate(&[PredictionRecord { paper_id: "p".into(), x, y }], 3).unwrap();
        assert!((m.precision_at_k - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.ndcg_at_k, 1.0);
    }

    #[test]
    fn k_out_of_range() {
        let r = PredictionRecord {
            paper_id: "p".into(),
            x: vec![0.5; 22],
            y: vec![0; 22],
        };
        assert!(evaluate(&[r.clone()], 23).is_err());
        assert!(evaluate(&[r], 0).is_err());
        assert!(evaluate(&[], 3).is_err());
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.random_range(2..12);
            // coarse scores to exercise ties
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64 / 4.0).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let a = auc_rank_statistic(&scores, &labels);
            let b = brute_auc(&scores, &labels);
            match (a, b) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (None, None) => {}
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn report_has_table_columns() {
        let r = PredictionRecord {
            paper_id: "p".into(),
            x: (0..22).map(|i| i as f64 / 22.0).collect(),
            y: (0..22).map(|i| u8::from(i > 18)).collect(),
        };
        let table = metrics_report("toy", &[r]).unwrap();
        assert!(table.contains("Pre.@3") && table.contains("NDCG@5") && table.contains("AUC"));
        assert!(table.contains("100.00"));
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_transform(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let records: Vec<PredictionRecord> = (0..4).map(|i| PredictionRecord {
                paper_id: i.to_string(),
                x: (0..22).map(|_| rng.random_range(0.01..0.99)).collect(),
                y: (0..22).map(|_| u8::from(rng.random_bool(0.3))).collect(),
            }).collect();
            let transformed: Vec<PredictionRecord> = records.iter().map(|r| PredictionRecord {
                x: r.x.iter().map(|v| (v * 3.0).exp() - 7.0).collect(),
                ..r.clone()
            }).collect();
            for k in [1, 3, 5] {
                let a = evaluate(&records, k).unwrap();
                let b = evaluate(&transformed, k).unwrap();
                prop_assert_eq!(a.precision_at_k, b.precision_at_k);
                prop_assert_eq!(a.ndcg_at_k, b.ndcg_at_k);
                prop_assert!((0.0..=1.0).contains(&a.precision_at_k));
                prop_assert!((0.0..=1.0).contains(&a.ndcg_at_k));
            }
        }
    }
}
