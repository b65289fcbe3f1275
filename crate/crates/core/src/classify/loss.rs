//! Multi-label BCE and the InfoNCE contrastive term, with analytic gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROB_EPS: f64 = 1e-12;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn check_binary(labels: &[f64]) -> Result<()> {
    match labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
        Some(y) => Err(Error::invalid(format!("label {y} is not binary"))),
        None => Ok(()),
    }
}

/// Mean binary cross-entropy over labels from probabilities, clamped to
/// [ε, 1−ε].
pub fn bce_loss(probs: &[f64], labels: &[f64]) -> Result<f64> {
    if probs.len() != labels.len() || probs.is_empty() {
        return Err(Error::invalid("prediction and label vectors differ in length or are empty"));
    }
    check_binary(labels)?;
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&x, &y)| {
            let x = x.clamp(PROB_EPS, 1.0 - PROB_EPS);
            y * x.ln() + (1.0 - y) * (1.0 - x).ln()
        })
        .sum();
    Ok(-sum / probs.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// BCE computed from logits (stable log-sigmoid form) with its gradient with
/// respect to the logits: (σ(l) − y) / L.
pub fn bce_with_logits(logits: &[f64], labels: &[f64]) -> Result<LossGrad> {
    if logits.len() != labels.len() || logits.is_empty() {
        return Err(Error::invalid("logit and label vectors differ in length or are empty"));
    }
    check_binary(labels)?;
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&l, &y) in logits.iter().zip(labels) {
        // −[y ln σ(l) + (1−y) ln(1−σ(l))] = softplus(l) − y·l
        loss += softplus(l) - y * l;
        grad.push((sigmoid(l) - y) / n);
    }
    Ok(LossGrad { loss: loss / n, grad })
}

/// Two embeddings of independently augmented views of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedPair {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoNceGrad {
    pub loss: f64,
    /// Gradient for each pair, (∂/∂z1, ∂/∂z2).
    pub grads: Vec<(Vec<f64>, Vec<f64>)>,
}

fn unit(z: &[f64]) -> Result<(Vec<f64>, f64)> {
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Numerical("embedding has zero or non-finite norm".into()));
    }
    Ok((z.iter().map(|v| v / norm).collect(), norm))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Batch InfoNCE with cosine similarity. For each anchor z_i1 the denominator
/// runs over every other embedding in the batch (its positive z_i2 included,
/// itself excluded); the batch loss is the mean over anchors.
pub fn info_nce_loss(batch: &[AugmentedPair], tau: f64) -> Result<InfoNceGrad> {
    if batch.is_empty() {
        return Err(Error::Empty("contrastive batch"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("temperature {tau} must be positive")));
    }
    let dim = batch[0].z1.len();
    if batch.iter().any(|p| p.z1.len() != dim || p.z2.len() != dim) {
        return Err(Error::invalid("embeddings differ in dimension"));
    }
    // Flattened views: index 2i is z_i1, 2i+1 is z_i2.
    let mut units = Vec::with_capacity(2 * batch.len());
    let mut norms = Vec::with_capacity(2 * batch.len());
    for p in batch {
        for z in [&p.z1, &p.z2] {
            let (u, n) = unit(z)?;
            units.push(u);
            norms.push(n);
        }
    }
    let m = units.len();
    let scale = 1.0 / batch.len() as f64;
    let mut unit_grads = vec![vec![0.0; dim]; m];
    let mut loss = 0.0;
    for i in 0..batch.len() {
        let anchor = 2 * i;
        let positive = anchor + 1;
        let logits: Vec<(usize, f64)> = (0..m)
            .filter(|&j| j != anchor)
            .map(|j| (j, dot(&units[anchor], &units[j]) / tau))
            .collect();
        let max = logits.iter().map(|&(_, s)| s).fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|&(_, s)| (s - max).exp()).sum();
        let log_denom = max + sum_exp.ln();
        let pos_logit = logits.iter().find(|&&(j, _)| j == positive).expect("positive present").1;
        loss += (log_denom - pos_logit) * scale;
        for &(j, s) in &logits {
            let p = (s - max).exp() / sum_exp;
            let g = (p - if j == positive { 1.0 } else { 0.0 }) * scale / tau;
            for d in 0..dim {
                unit_grads[anchor][d] += g * units[j][d];
                unit_grads[j][d] += g * units[anchor][d];
            }
        }
    }
    // Back through the normalization: ∂u/∂z · g = (g − (g·u)u) / |z|
    let mut grads_flat: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let gu = dot(&unit_grads[k], &units[k]);
        grads_flat.push(
            unit_grads[k]
                .iter()
                .zip(&units[k])
                .map(|(g, u)| (g - gu * u) / norms[k])
                .collect(),
        );
    }
    let mut grads = Vec::with_capacity(batch.len());
    let mut it = grads_flat.into_iter();
    while let (Some(a), Some(b)) = (it.next(), it.next()) {
        grads.push((a, b));
    }
    Ok(InfoNceGrad { loss, grads })
}

/// Unweighted sum of the classification and contrastive terms.
pub fn total_loss(bce: f64, contrastive: f64) -> f64 {
    bce + contrastive
}
