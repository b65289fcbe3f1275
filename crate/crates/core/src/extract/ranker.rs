use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{RankFeatures, NUM_FEATURES};
use super::lambdarank::{all_pairs, lambdarank_loss};
use super::ndcg::ndcg;
use crate::error::{Error, Result};

pub const RANKER_FORMAT: &str = "covidia-ranker-model";
pub const RANKER_VERSION: u32 = 1;

/// Two-layer scorer: s = w2 · relu(W1 · f' + b1) + b2, where f' is the feature
/// vector after a fixed affine standardization fitted on the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerModel {
    pub format: String,
    pub version: u32,
    pub hidden: usize,
    /// hidden × features, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub sigma: f64,
    pub input_shift: [f64; NUM_FEATURES],
    pub input_scale: [f64; NUM_FEATURES],
    /// Tagging threshold chosen on validation data, if any.
    #[serde(default)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub sigma: f64,
    pub k: usize,
    pub seed: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            epochs: 60,
            learning_rate: 0.05,
            hidden: 16,
            sigma: 1.0,
            k: 10,
            seed: 7,
        }
    }
}

/// Candidate list of one paper with binary relevance labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankGroup {
    pub paper_id: String,
    pub entity_ids: Vec<String>,
    pub features: Vec<RankFeatures>,
    pub labels: Vec<u8>,
}

impl RankGroup {
    pub fn is_trainable(&self) -> bool {
        self.labels.contains(&1) && self.labels.contains(&0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankerReport {
    pub skipped_groups: Vec<String>,
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankerGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl RankerModel {
    pub fn init(hidden: usize, sigma: f64, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::invalid("hidden width must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = (6.0 / (NUM_FEATURES + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + 1) as f64).sqrt();
        Ok(RankerModel {
            format: RANKER_FORMAT.to_owned(),
            version: RANKER_VERSION,
            hidden,
            w1: (0..hidden * NUM_FEATURES).map(|_| rng.random_range(-a1..a1)).collect(),
            b1: vec![0.1; hidden],
            w2: (0..hidden).map(|_| rng.random_range(-a2..a2)).collect(),
            b2: 0.0,
            sigma,
            input_shift: [0.0; NUM_FEATURES],
            input_scale: [1.0; NUM_FEATURES],
            threshold: None,
        })
    }

    fn input(&self, f: &RankFeatures) -> [f64; NUM_FEATURES] {
        let mut x = f.as_array();
        for (i, v) in x.iter_mut().enumerate() {
            *v = (*v - self.input_shift[i]) * self.input_scale[i];
        }
        x
    }

    fn hidden_pre(&self, x: &[f64; NUM_FEATURES]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * NUM_FEATURES..(j + 1) * NUM_FEATURES];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j]
            })
            .collect()
    }

    pub fn score(&self, f: &RankFeatures) -> f64 {
        let pre = self.hidden_pre(&self.input(f));
        pre.iter().zip(&self.w2).map(|(h, w)| h.max(0.0) * w).sum::<f64>() + self.b2
    }

    /// Scores in input order.
    pub fn score_batch(&self, fs: &[RankFeatures]) -> Vec<f64> {
        fs.iter().map(|f| self.score(f)).collect()
    }

    /// LambdaRank loss of one group and its gradient with respect to every
    /// network parameter.
    pub fn group_loss_and_grad(&self, group: &RankGroup, k: usize) -> Result<(f64, RankerGradients)> {
        let scores = self.score_batch(&group.features);
        let pairs = all_pairs(&group.labels);
        let out = lambdarank_loss(&pairs, &scores, &group.labels, k, self.sigma)?;
        let mut g = RankerGradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.hidden],
            b2: 0.0,
        };
        for (f, &ds) in group.features.iter().zip(&out.grad) {
            if ds == 0.0 {
                continue;
            }
            let x = self.input(f);
            let pre = self.hidden_pre(&x);
            g.b2 += ds;
            for j in 0..self.hidden {
                g.w2[j] += ds * pre[j].max(0.0);
                if pre[j] > 0.0 {
                    let dh = ds * self.w2[j];
                    g.b1[j] += dh;
                    for (i, xv) in x.iter().enumerate() {
                        g.w1[j * NUM_FEATURES + i] += dh * xv;
                    }
                }
            }
        }
        Ok((out.loss, g))
    }

    fn apply(&mut self, g: &RankerGradients, lr: f64) {
        for (w, d) in self.w1.iter_mut().zip(&g.w1) {
            *w -= lr * d;
        }
        for (w, d) in self.b1.iter_mut().zip(&g.b1) {
            *w -= lr * d;
        }
        for (w, d) in self.w2.iter_mut().zip(&g.w2) {
            *w -= lr * d;
        }
        self.b2 -= lr * g.b2;
    }

    /// NDCG@k of a group under this model's ordering.
    pub fn group_ndcg(&self, group: &RankGroup, k: usize) -> f64 {
        let scores = self.score_batch(&group.features);
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let ranked: Vec<u8> = order.iter().map(|&i| group.labels[i]).collect();
        ndcg(&ranked, k)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).map_err(|e| Error::invalid(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::write(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read(path).map_err(|e| Error::read(path, e))?;
        let m: RankerModel = serde_json::from_slice(&raw).map_err(|e| Error::Format {
            what: "ranker model",
            message: e.to_string(),
        })?;
        if m.format != RANKER_FORMAT || m.version != RANKER_VERSION {
            return Err(Error::Format {
                what: "ranker model",
                message: format!("unsupported format {} v{}", m.format, m.version),
            });
        }
        Ok(m)
    }
}

fn fit_standardization(groups: &[&RankGroup]) -> ([f64; NUM_FEATURES], [f64; NUM_FEATURES]) {
    let rows: Vec<[f64; NUM_FEATURES]> = groups.iter().flat_map(|g| g.features.iter().map(|f| f.as_array())).collect();
    let mut shift = [0.0; NUM_FEATURES];
    let mut scale = [1.0; NUM_FEATURES];
    if rows.is_empty() {
        return (shift, scale);
    }
    let n = rows.len() as f64;
    for i in 0..NUM_FEATURES {
        let mean = rows.iter().map(|r| r[i]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / n;
        shift[i] = mean;
        scale[i] = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
    }
    (shift, scale)
}

/// Train the scorer group by group with LambdaRank gradients. Groups without
/// both a positive and a negative label are skipped and reported.
pub fn train_ranker(groups: &[RankGroup], config: &RankerConfig) -> Result<(RankerModel, RankerReport)> {
    let mut report = RankerReport::default();
    let usable: Vec<&RankGroup> = groups
        .iter()
        .filter(|g| {
            let ok = g.is_trainable();
            if !ok {
                log::warn!("skipping ranking group {}: needs both a positive and a negative", g.paper_id);
                report.skipped_groups.push(g.paper_id.clone());
            }
            ok
        })
        .collect();
    let mut model = RankerModel::init(config.hidden, config.sigma, config.seed)?;
    if config.epochs == 0 {
        return Ok((model, report));
    }
    let (shift, scale) = fit_standardization(&usable);
    model.input_shift = shift;
    model.input_scale = scale;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..usable.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (loss, g) = model.group_loss_and_grad(usable[i], config.k)?;
            model.apply(&g, config.learning_rate);
            total += loss;
        }
        report.epoch_losses.push(if usable.is_empty() { 0.0 } else { total / usable.len() as f64 });
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat(t: f64, l: f64, c: f64, n: f64) -> RankFeatures {
        RankFeatures {
            tfidf_score: t,
            length: l,
            complexity: c,
            letter_count: n,
        }
    }

    #[test]
    fn zero_weights_score_is_b2() {
        let mut m = RankerModel::init(4, 1.0, 1).unwrap();
        m.w1.iter_mut().for_each(|w| *w = 0.0);
        m.w2.iter_mut().for_each(|w| *w = 0.0);
        m.b2 = 0.37;
        assert_eq!(m.score(&feat(1.0, 2.0, 3.0, 4.0)), 0.37);
    }

    #[test]
    fn hand_forward_pass() {
        let mut m = RankerModel::init(2, 1.0, 1).unwrap();
        // h0 = relu(f0 + f1 - 1), h1 = relu(-f2 + 0.5)
        m.w1 = vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0];
        m.b1 = vec![-1.0, 0.5];
        m.w2 = vec![2.0, 3.0];
        m.b2 = 0.25;
        let f = feat(0.8, 2.0, 0.1, 9.0);
        // h0 = 1.8, h1 = 0.4 -> 3.6 + 1.2 + 0.25
        assert!((m.score(&f) - 5.05).abs() < 1e-12);
        let batch = [feat(0.0, 0.0, 1.0, 0.0), f];
        assert_eq!(m.score_batch(&batch), vec![m.score(&batch[0]), m.score(&batch[1])]);
    }

    #[test]
    fn zero_epochs_is_init() {
        let config = RankerConfig {
            epochs: 0,
            ..Default::default()
        };
        let (m, _) = train_ranker(&[], &config).unwrap();
        assert_eq!(m, RankerModel::init(config.hidden, config.sigma, config.seed).unwrap());
    }

    #[test]
    fn one_class_groups_skipped() {
        let g = RankGroup {
            paper_id: "p".into(),
            entity_ids: vec!["a".into()],
            features: vec![feat(0.1, 1.0, 1.0, 3.0)],
            labels: vec![1],
        };
        let (_, report) = train_ranker(&[g], &RankerConfig::default()).unwrap();
        assert_eq!(report.skipped_groups, vec!["p".to_owned()]);
    }

    fn random_group(rng: &mut ChaCha8Rng, n: usize) -> RankGroup {
        let features: Vec<RankFeatures> = (0..n)
            .map(|_| feat(rng.random(), rng.random_range(1.0..4.0), rng.random_range(0.0..3.0), rng.random_range(2.0..20.0)))
            .collect();
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 1;
        labels[n - 1] = 0;
        RankGroup {
            paper_id: "g".into(),
            entity_ids: (0..n).map(|i| format!("e{i}")).collect(),
            features,
            labels,
        }
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..5 {
            let m = RankerModel::init(6, 1.0, trial).unwrap();
            let g = random_group(&mut rng, 7);
            let (_, grad) = m.group_loss_and_grad(&g, 10).unwrap();
            let loss_at = |m: &RankerModel| m.group_loss_and_grad(&g, 10).unwrap().0;
            let h = 1e-6;
            let check = |analytic: f64, plus: f64, minus: f64| {
                let numeric = (plus - minus) / (2.0 * h);
                let denom = analytic.abs().max(numeric.abs()).max(1e-4);
                assert!((analytic - numeric).abs() / denom < 1e-4, "analytic {analytic} numeric {numeric}");
            };
            for i in 0..m.w1.len() {
                let (mut p, mut q) = (m.clone(), m.clone());
                p.w1[i] += h;
                q.w1[i] -= h;
                check(grad.w1[i], loss_at(&p), loss_at(&q));
            }
            for i in 0..m.hidden {
                let (mut p, mut q) = (m.clone(), m.clone());
                p.b1[i] += h;
                q.b1[i] -= h;
                check(grad.b1[i], loss_at(&p), loss_at(&q));
                let (mut p, mut q) = (m.clone(), m.clone());
                p.w2[i] += h;
                q.w2[i] -= h;
                check(grad.w2[i], loss_at(&p), loss_at(&q));
            }
            let (mut p, mut q) = (m.clone(), m.clone());
            p.b2 += h;
            q.b2 -= h;
            check(grad.b2, loss_at(&p), loss_at(&q));
        }
    }

    #[test]
    fn training_is_deterministic_and_lowers_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let groups: Vec<RankGroup> = (0..20)
            .map(|_| {
                let mut g = random_group(&mut rng, 8);
                for (f, l) in g.features.iter_mut().zip(&g.labels) {
                    f.tfidf_score = if *l == 1 { 0.6 + f.tfidf_score * 0.4 } else { f.tfidf_score * 0.4 };
                }
                g
            })
            .collect();
        let config = RankerConfig::default();
        let (a, ra) = train_ranker(&groups, &config).unwrap();
        let (b, _) = train_ranker(&groups, &config).unwrap();
        assert_eq!(a, b);
        assert!(ra.epoch_losses.last().unwrap() < ra.epoch_losses.first().unwrap());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ranker.json");
        let m = RankerModel::init(5, 1.5, 9).unwrap();
        m.save(&path).unwrap();
        assert_eq!(RankerModel::load(&path).unwrap(), m);
    }
}
