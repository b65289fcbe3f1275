use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::triples::{RelationAnnotation, RelationInput, RelationLabel, NUM_RELATION_LABELS};
use crate::error::{Error, Result};
use crate::text::tokenize;

pub const RELATION_FORMAT: &str = "covidia-relation-model";
pub const RELATION_VERSION: u32 = 1;
pub const MAX_TOKENS: usize = 128;
pub const UNK: &str = "<unk>";

/// Token, segment and position embeddings summed per token, mean pooled, then
/// a bias-free linear softmax head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationModel {
    pub format: String,
    pub version: u32,
    /// Index 0 is the unknown token.
    pub tokens: Vec<String>,
    pub dim: usize,
    /// tokens × dim, row-major.
    pub token_emb: Vec<f64>,
    /// 2 × dim: row 0 outside the triple, row 1 inside.
    pub segment_emb: Vec<f64>,
    /// MAX_TOKENS × dim.
    pub position_emb: Vec<f64>,
    /// labels × dim.
    pub w: Vec<f64>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelationConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Default for RelationConfig {
    fn default() -> Self {
        RelationConfig {
            epochs: 30,
            learning_rate: 0.5,
            dim: 16,
            seed: 7,
        }
    }
}

/// Token ids and the in-triple mask of one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedInput {
    pub ids: Vec<usize>,
    pub mask: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelationGradients {
    pub token_rows: BTreeMap<usize, Vec<f64>>,
    pub segment: Vec<f64>,
    pub position: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RelationReport {
    pub epoch_losses: Vec<f64>,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// First occurrence of `needle` as a contiguous token run in `hay`.
pub fn find_tokens(hay: &[String], needle: &[String]) -> Option<Range<usize>> {
    if needle.is_empty() || needle.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - needle.len())
        .find(|&i| hay[i..i + needle.len()] == *needle)
        .map(|i| i..i + needle.len())
}

/// 1 for tokens inside any span, else 0.
pub fn segment_mask(len: usize, spans: &[Range<usize>]) -> Vec<u8> {
    (0..len).map(|i| spans.iter().any(|s| s.contains(&i)) as u8).collect()
}

impl RelationModel {
    fn with_tokens(tokens: Vec<String>, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding width must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = |rows: usize, a: f64| -> Vec<f64> { (0..rows * dim).map(|_| rng.random_range(-a..a)).collect() };
        let token_emb = table(tokens.len(), 0.1);
        let segment_emb = table(2, 0.1);
        let position_emb = table(MAX_TOKENS, 0.1);
        let w = table(NUM_RELATION_LABELS, (6.0 / (dim + NUM_RELATION_LABELS) as f64).sqrt());
        let mut m = RelationModel {
            format: RELATION_FORMAT.to_owned(),
            version: RELATION_VERSION,
            tokens,
            dim,
            token_emb,
            segment_emb,
            position_emb,
            w,
            lookup: HashMap::new(),
        };
        m.rebuild_lookup();
        Ok(m)
    }

    /// Random model over the tokens of the annotation sentences.
    pub fn init(annotations: &[RelationAnnotation], dim: usize, seed: u64) -> Result<Self> {
        let vocab: BTreeSet<String> = annotations.iter().flat_map(|a| tokenize(&a.input.sentence)).collect();
        let tokens = std::iter::once(UNK.to_owned()).chain(vocab.into_iter().filter(|t| t != UNK)).collect();
        Self::with_tokens(tokens, dim, seed)
    }

    fn rebuild_lookup(&mut self) {
        self.lookup = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn token_id(&self, token: &str) -> usize {
        self.lookup.get(token).copied().unwrap_or(0)
    }

    /// Tokenize, truncate to `MAX_TOKENS` and mark the head, relation and tail
    /// tokens where they occur.
    pub fn prepare(&self, input: &RelationInput) -> EncodedInput {
        let mut toks = tokenize(&input.sentence);
        toks.truncate(MAX_TOKENS);
        let spans: Vec<Range<usize>> = [&input.head, &input.relation, &input.tail]
            .iter()
            .filter_map(|s| find_tokens(&toks, &tokenize(s)))
            .collect();
        EncodedInput {
            mask: segment_mask(toks.len(), &spans),
            ids: toks.iter().map(|t| self.token_id(t)).collect(),
        }
    }

    /// Mean over tokens of token + segment + position embeddings. An empty
    /// sentence encodes to the zero vector.
    pub fn encode(&self, x: &EncodedInput) -> Vec<f64> {
        let d = self.dim;
        let mut h = vec![0.0; d];
        let n = x.ids.len().min(MAX_TOKENS);
        for p in 0..n {
            let tok = &self.token_emb[x.ids[p] * d..(x.ids[p] + 1) * d];
            let seg = &self.segment_emb[x.mask[p] as usize * d..(x.mask[p] as usize + 1) * d];
            let pos = &self.position_emb[p * d..(p + 1) * d];
            for k in 0..d {
                h[k] += tok[k] + seg[k] + pos[k];
            }
        }
        if n > 0 {
            h.iter_mut().for_each(|v| *v /= n as f64);
        }
        h
    }

    /// Encode a sentence with explicit head and tail token spans.
    pub fn encode_spans(&self, sentence: &str, h_span: Range<usize>, t_span: Range<usize>) -> Vec<f64> {
        let mut toks = tokenize(sentence);
        toks.truncate(MAX_TOKENS);
        self.encode(&EncodedInput {
            mask: segment_mask(toks.len(), &[h_span, t_span]),
            ids: toks.iter().map(|t| self.token_id(t)).collect(),
        })
    }

    pub fn logits(&self, h: &[f64]) -> Vec<f64> {
        self.w.chunks(self.dim).map(|row| row.iter().zip(h).map(|(a, b)| a * b).sum()).collect()
    }

    /// Label distribution for a pooled vector.
    pub fn classify(&self, h: &[f64]) -> Vec<f64> {
        softmax(&self.logits(h))
    }

    pub fn predict(&self, input: &RelationInput) -> (RelationLabel, Vec<f64>) {
        let p = self.classify(&self.encode(&self.prepare(input)));
        let best = p
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if *v > p[b] { i } else { b });
        (RelationLabel::from_index(best).expect("label index"), p)
    }

    /// Negative log-likelihood of `label` and its gradient.
    pub fn loss_and_grad(&self, x: &EncodedInput, label: RelationLabel) -> (f64, RelationGradients) {
        let d = self.dim;
        let h = self.encode(x);
        let p = self.classify(&h);
        let y = label.index();
        let loss = -p[y].max(f64::MIN_POSITIVE).ln();
        let mut dz = p.clone();
        dz[y] -= 1.0;
        let mut g = RelationGradients {
            token_rows: BTreeMap::new(),
            segment: vec![0.0; 2 * d],
            position: vec![0.0; MAX_TOKENS * d],
            w: vec![0.0; self.w.len()],
        };
        let mut dh = vec![0.0; d];
        for (c, dzc) in dz.iter().enumerate() {
            for k in 0..d {
                g.w[c * d + k] = dzc * h[k];
                dh[k] += dzc * self.w[c * d + k];
            }
        }
        let n = x.ids.len().min(MAX_TOKENS);
        if n == 0 {
            return (loss, g);
        }
        let scale = 1.0 / n as f64;
        for p in 0..n {
            let row = g.token_rows.entry(x.ids[p]).or_insert_with(|| vec![0.0; d]);
            let s = x.mask[p] as usize;
            for k in 0..d {
                let v = dh[k] * scale;
                row[k] += v;
                g.segment[s * d + k] += v;
                g.position[p * d + k] += v;
            }
        }
        (loss, g)
    }

    fn apply(&mut self, g: &RelationGradients, lr: f64) {
        let d = self.dim;
        for (&r, row) in &g.token_rows {
            for (w, v) in self.token_emb[r * d..(r + 1) * d].iter_mut().zip(row) {
                *w -= lr * v;
            }
        }
        for (w, v) in self.segment_emb.iter_mut().zip(&g.segment) {
            *w -= lr * v;
        }
        for (w, v) in self.position_emb.iter_mut().zip(&g.position) {
            *w -= lr * v;
        }
        for (w, v) in self.w.iter_mut().zip(&g.w) {
            *w -= lr * v;
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).map_err(|e| Error::invalid(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::write(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read(path).map_err(|e| Error::read(path, e))?;
        let mut m: RelationModel = serde_json::from_slice(&raw).map_err(|e| Error::Format {
            what: "relation model",
            message: e.to_string(),
        })?;
        if m.format != RELATION_FORMAT || m.version != RELATION_VERSION {
            return Err(Error::Format {
                what: "relation model",
                message: format!("unsupported format {} v{}", m.format, m.version),
            });
        }
        let d = m.dim;
        if d == 0
            || m.token_emb.len() != m.tokens.len() * d
            || m.segment_emb.len() != 2 * d
            || m.position_emb.len() != MAX_TOKENS * d
            || m.w.len() != NUM_RELATION_LABELS * d
        {
            return Err(Error::Format {
                what: "relation model",
                message: "table shapes do not match".into(),
            });
        }
        m.rebuild_lookup();
        Ok(m)
    }
}

/// Maximum-likelihood training by per-example SGD. Needs at least two
/// distinct labels.
pub fn train_relation(annotations: &[RelationAnnotation], config: &RelationConfig) -> Result<(RelationModel, RelationReport)> {
    let labels: BTreeSet<RelationLabel> = annotations.iter().map(|a| a.label).collect();
    if labels.len() < 2 {
        return Err(Error::invalid("relation training needs at least two distinct labels"));
    }
    let mut model = RelationModel::init(annotations, config.dim, config.seed)?;
    let encoded: Vec<(EncodedInput, RelationLabel)> = annotations.iter().map(|a| (model.prepare(&a.input), a.label)).collect();
    let mut report = RelationReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (loss, g) = model.loss_and_grad(&encoded[i].0, encoded[i].1);
            model.apply(&g, config.learning_rate);
            total += loss;
        }
        report.epoch_losses.push(total / encoded.len() as f64);
    }
    Ok((model, report))
}

/// Macro precision and recall over is_A, impact and related_to. Classes
/// without gold instances are left out of the average; a class that is never
/// predicted has precision 0.
pub fn evaluate_relations(predictions: &[RelationLabel], gold: &[RelationLabel]) -> Result<(f64, f64)> {
    if gold.is_empty() {
        return Err(Error::Empty("gold relation labels"));
    }
    if predictions.len() != gold.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    let classes: Vec<RelationLabel> = [RelationLabel::IsA, RelationLabel::Impact, RelationLabel::RelatedTo]
        .into_iter()
        .filter(|c| gold.contains(c))
        .collect();
    if classes.is_empty() {
        return Err(Error::invalid("gold labels contain no relation class"));
    }
    let (mut p_sum, mut r_sum) = (0.0, 0.0);
    for c in &classes {
        let tp = predictions.iter().zip(gold).filter(|(p, g)| *p == c && *g == c).count() as f64;
        let predicted = predictions.iter().filter(|p| *p == c).count() as f64;
        let actual = gold.iter().filter(|g| *g == c).count() as f64;
        p_sum += if predicted > 0.0 { tp / predicted } else { 0.0 };
        r_sum += tp / actual;
    }
    let n = classes.len() as f64;
    Ok((p_sum / n, r_sum / n))
}
