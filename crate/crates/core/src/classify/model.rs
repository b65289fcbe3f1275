use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::augment;
use super::loss::{bce_with_logits, info_nce_loss, sigmoid, total_loss, AugmentedPair};
use super::vocab::{build_vocabulary, FeatureVector, Vocabulary};
use crate::disciplines::NUM_DISCIPLINES;
use crate::error::{Error, Result};
use crate::text::tokenize;

pub const MODEL_FORMAT: &str = "covidia-discipline-model";
pub const MODEL_VERSION: u32 = 1;

/// Linear tf-idf encoder producing an embedding `z`, followed by a linear
/// multi-label head over the 22 disciplines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplineModel {
    pub format: String,
    pub version: u32,
    pub vocabulary: Vocabulary,
    pub dim: usize,
    /// vocab × dim, row-major.
    pub encoder: Vec<f64>,
    pub encoder_bias: Vec<f64>,
    /// dim × labels, row-major.
    pub classifier: Vec<f64>,
    pub classifier_bias: Vec<f64>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub dim: usize,
    pub drop_prob: f64,
    pub temperature: f64,
    pub contrastive: bool,
    pub min_df: usize,
    pub max_vocab: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.5,
            batch_size: 16,
            seed: 7,
            dim: 32,
            drop_prob: 0.3,
            temperature: 0.5,
            contrastive: true,
            min_df: 1,
            max_vocab: 20_000,
        }
    }
}

/// A training document: its text and the set of discipline indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub paper_id: String,
    pub text: String,
    pub labels: BTreeSet<usize>,
}

impl TrainingExample {
    pub fn label_vector(&self) -> Vec<f64> {
        let mut y = vec![0.0; NUM_DISCIPLINES];
        for &l in &self.labels {
            y[l] = 1.0;
        }
        y
    }
}

/// Featurized inputs of one sample in a mini-batch: the clean document and, when
/// the contrastive term is active, its two augmented views.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub x: FeatureVector,
    pub views: Option<(FeatureVector, FeatureVector)>,
    pub y: Vec<f64>,
}

/// Parameter gradients, shaped like the model. Encoder rows are sparse.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradients {
    pub encoder_rows: BTreeMap<usize, Vec<f64>>,
    pub encoder_bias: Vec<f64>,
    pub classifier: Vec<f64>,
    pub classifier_bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss {
    pub bce: f64,
    pub contrastive: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean total loss per epoch.
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: BTreeSet<usize>,
    pub probabilities: Vec<f64>,
}

impl DisciplineModel {
    pub fn init(vocabulary: Vocabulary, dim: usize, temperature: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding width must be positive"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |n: usize, a: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(-a..a)).collect() };
        let v = vocabulary.len();
        let encoder = uniform(v * dim, 1.0 / (dim as f64).sqrt());
        let encoder_bias = uniform(dim, 0.1);
        let classifier = uniform(dim * NUM_DISCIPLINES, 1.0 / (dim as f64).sqrt());
        Ok(DisciplineModel {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            vocabulary,
            dim,
            encoder,
            encoder_bias,
            classifier,
            classifier_bias: vec![0.0; NUM_DISCIPLINES],
            temperature,
        })
    }

    pub fn featurize(&self, text: &str) -> FeatureVector {
        self.vocabulary.featurize(&tokenize(text))
    }

    pub fn embed(&self, x: &FeatureVector) -> Vec<f64> {
        let mut z = self.encoder_bias.clone();
        for &(i, w) in &x.entries {
            let row = &self.encoder[i * self.dim..(i + 1) * self.dim];
            for (zd, r) in z.iter_mut().zip(row) {
                *zd += w * r;
            }
        }
        z
    }

    pub fn logits(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.classifier_bias.clone();
        for (d, &zd) in z.iter().enumerate() {
            let row = &self.classifier[d * NUM_DISCIPLINES..(d + 1) * NUM_DISCIPLINES];
            for (o, w) in out.iter_mut().zip(row) {
                *o += zd * w;
            }
        }
        out
    }

    pub fn probabilities(&self, x: &FeatureVector) -> Vec<f64> {
        self.logits(&self.embed(x)).into_iter().map(sigmoid).collect()
    }

    fn backprop_encoder(&self, x: &FeatureVector, dz: &[f64], g: &mut Gradients) {
        for (b, d) in g.encoder_bias.iter_mut().zip(dz) {
            *b += d;
        }
        for &(i, w) in &x.entries {
            let row = g.encoder_rows.entry(i).or_insert_with(|| vec![0.0; self.dim]);
            for (r, d) in row.iter_mut().zip(dz) {
                *r += w * d;
            }
        }
    }

    /// Loss of a mini-batch (mean BCE over samples plus, when views are given,
    /// InfoNCE over the views) and its gradient with respect to every parameter.
    pub fn batch_loss_and_grad(&self, batch: &[BatchItem]) -> Result<(BatchLoss, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut g = Gradients {
            encoder_rows: BTreeMap::new(),
            encoder_bias: vec![0.0; self.dim],
            classifier: vec![0.0; self.dim * NUM_DISCIPLINES],
            classifier_bias: vec![0.0; NUM_DISCIPLINES],
        };
        let mut bce = 0.0;
        for item in batch {
            let z = self.embed(&item.x);
            let out = bce_with_logits(&self.logits(&z), &item.y)?;
            bce += out.loss * scale;
            let dl: Vec<f64> = out.grad.iter().map(|v| v * scale).collect();
            let mut dz = vec![0.0; self.dim];
            for d in 0..self.dim {
                let row = d * NUM_DISCIPLINES;
                for (l, &gl) in dl.iter().enumerate() {
                    g.classifier[row + l] += z[d] * gl;
                    dz[d] += self.classifier[row + l] * gl;
                }
            }
            for (b, gl) in g.classifier_bias.iter_mut().zip(&dl) {
                *b += gl;
            }
            self.backprop_encoder(&item.x, &dz, &mut g);
        }

        let mut contrastive = 0.0;
        let views: Vec<&(FeatureVector, FeatureVector)> = batch.iter().filter_map(|b| b.views.as_ref()).collect();
        if !views.is_empty() {
            let pairs: Vec<AugmentedPair> = views
                .iter()
                .map(|(a, b)| AugmentedPair {
                    z1: self.embed(a),
                    z2: self.embed(b),
                })
                .collect();
            let out = info_nce_loss(&pairs, self.temperature)?;
            contrastive = out.loss;
            for ((a, b), (ga, gb)) in views.iter().zip(&out.grads) {
                self.backprop_encoder(a, ga, &mut g);
                self.backprop_encoder(b, gb, &mut g);
            }
        }
        Ok((
            BatchLoss {
                bce,
                contrastive,
                total: total_loss(bce, contrastive),
            },
            g,
        ))
    }

    fn apply(&mut self, g: &Gradients, lr: f64) {
        for (&i, row) in &g.encoder_rows {
            for (w, d) in self.encoder[i * self.dim..(i + 1) * self.dim].iter_mut().zip(row) {
                *w -= lr * d;
            }
        }
        for (w, d) in self.encoder_bias.iter_mut().zip(&g.encoder_bias) {
            *w -= lr * d;
        }
        for (w, d) in self.classifier.iter_mut().zip(&g.classifier) {
            *w -= lr * d;
        }
        for (w, d) in self.classifier_bias.iter_mut().zip(&g.classifier_bias) {
            *w -= lr * d;
        }
    }

    /// Labels whose probability clears `threshold`; if none does, the single
    /// most probable label (lowest index on ties).
    pub fn predict(&self, text: &str, threshold: f64) -> Prediction {
        let probabilities = self.probabilities(&self.featurize(text));
        let mut labels: BTreeSet<usize> = probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= threshold)
            .map(|(i, _)| i)
            .collect();
        if labels.is_empty() {
            labels.insert(argmax(&probabilities));
        }
        Prediction { labels, probabilities }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).map_err(|e| Error::invalid(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::write(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read(path).map_err(|e| Error::read(path, e))?;
        let m: DisciplineModel = serde_json::from_slice(&raw).map_err(|e| Error::Format {
            what: "discipline model",
            message: e.to_string(),
        })?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Format {
                what: "discipline model",
                message: format!("unsupported format {} v{}", m.format, m.version),
            });
        }
        Ok(m)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Prepare a mini-batch, drawing the augmented views from `rng`.
pub fn make_batch(
    model: &DisciplineModel,
    docs: &[(&[String], Vec<f64>)],
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BatchItem>> {
    docs.iter()
        .map(|(tokens, y)| {
            let views = if config.contrastive && !tokens.is_empty() {
                let a = augment(tokens, rng, config.drop_prob)?;
                let b = augment(tokens, rng, config.drop_prob)?;
                Some((model.vocabulary.featurize(&a), model.vocabulary.featurize(&b)))
            } else {
                None
            };
            Ok(BatchItem {
                x: model.vocabulary.featurize(tokens),
                views,
                y: y.clone(),
            })
        })
        .collect()
}

/// Mini-batch gradient descent on BCE (+ InfoNCE when enabled). Deterministic
/// for a fixed seed.
pub fn train(dataset: &[TrainingExample], config: &TrainConfig) -> Result<(DisciplineModel, TrainReport)> {
    if dataset.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if let Some(ex) = dataset.iter().find(|e| e.labels.is_empty()) {
        return Err(Error::invalid(format!("example {} has no positive label", ex.paper_id)));
    }
    if let Some(ex) = dataset.iter().find(|e| e.labels.iter().any(|&l| l >= NUM_DISCIPLINES)) {
        return Err(Error::invalid(format!("example {} has a label outside 0..22", ex.paper_id)));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let tokens: Vec<Vec<String>> = dataset.iter().map(|e| tokenize(&e.text)).collect();
    let vocabulary = build_vocabulary(&tokens, config.min_df, config.max_vocab)?;
    let mut model = DisciplineModel::init(vocabulary, config.dim, config.temperature, config.seed)?;
    let labels: Vec<Vec<f64>> = dataset.iter().map(TrainingExample::label_vector).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut report = TrainReport::default();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let docs: Vec<(&[String], Vec<f64>)> =
                chunk.iter().map(|&i| (tokens[i].as_slice(), labels[i].clone())).collect();
            let batch = make_batch(&model, &docs, config, &mut rng)?;
            let (loss, grad) = model.batch_loss_and_grad(&batch)?;
            model.apply(&grad, config.learning_rate);
            epoch_loss += loss.total;
            batches += 1;
        }
        report.epoch_losses.push(epoch_loss / batches as f64);
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(id: &str, text: &str, labels: &[usize]) -> TrainingExample {
        TrainingExample {
            paper_id: id.into(),
            text: text.into(),
            labels: labels.iter().copied().collect(),
        }
    }

    fn toy() -> Vec<TrainingExample> {
        vec![
            example("a", "virus vaccine trial immune", &[10]),
            example("b", "network algorithm data model", &[7]),
            example("c", "vaccine antibody response", &[10, 5]),
            example("d", "algorithm graph learning data", &[7]),
        ]
    }

    #[test]
    fn zero_epochs_returns_initialized_model() {
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (model, report) = train(&toy(), &config).unwrap();
        let tokens: Vec<Vec<String>> = toy().iter().map(|e| tokenize(&e.text)).collect();
        let vocab = build_vocabulary(&tokens, config.min_df, config.max_vocab).unwrap();
        assert_eq!(model, DisciplineModel::init(vocab, config.dim, config.temperature, config.seed).unwrap());
        assert!(report.epoch_losses.is_empty());
    }

    #[test]
    fn training_errors() {
        assert!(train(&[], &TrainConfig::default()).is_err());
        assert!(train(&[example("x", "t", &[])], &TrainConfig::default()).is_err());
        assert!(train(&[example("x", "t", &[30])], &TrainConfig::default()).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let config = TrainConfig {
            epochs: 3,
            batch_size: 2,
            ..TrainConfig::default()
        };
        let (a, ra) = train(&toy(), &config).unwrap();
        let (b, rb) = train(&toy(), &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn predict_threshold_and_fallback() {
        let (model, _) = train(&toy(), &TrainConfig { epochs: 40, batch_size: 4, ..Default::default() }).unwrap();
        let p = model.predict("vaccine immune antibody", 0.5);
        assert!(p.labels.contains(&10));
        let none = model.predict("vaccine", 1.1);
        assert_eq!(none.labels.len(), 1);
        assert_eq!(*none.labels.iter().next().unwrap(), argmax(&none.probabilities));
    }

    #[test]
    fn save_load_round_trip() {
        let (model, _) = train(&toy(), &TrainConfig { epochs: 1, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        model.save(&path).unwrap();
        assert_eq!(DisciplineModel::load(&path).unwrap(), model);
    }
}
