use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse tf-idf vector: (token index, weight) pairs in ascending index order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    tokens: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    tokens: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
}

impl From<VocabularyData> for Vocabulary {
    fn from(d: VocabularyData) -> Self {
        let index = d.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens: d.tokens,
            idf: d.idf,
            n_docs: d.n_docs,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        VocabularyData {
            tokens: v.tokens,
            idf: v.idf,
            n_docs: v.n_docs,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.idf == other.idf && self.n_docs == other.n_docs
    }
}

/// Keep tokens with document frequency ≥ `min_df`, at most `max_vocab` of them
/// (highest df first, ties lexicographic). idf = ln(N / df).
pub fn build_vocabulary(docs: &[Vec<String>], min_df: usize, max_vocab: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df).collect();
    if kept.is_empty() {
        log::warn!("vocabulary is empty: no token reaches min_df={min_df} over {} documents", docs.len());
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    kept.truncate(max_vocab);
    let n = docs.len() as f64;
    Ok(Vocabulary::from(VocabularyData {
        tokens: kept.iter().map(|(t, _)| t.to_string()).collect(),
        idf: kept.iter().map(|&(_, c)| (n / c as f64).ln()).collect(),
        n_docs: docs.len(),
    }))
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.index_of(token).map(|i| self.idf[i])
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// L2-normalized (count / length) · idf vector. Out-of-vocabulary tokens
    /// are ignored; a document with no weighted tokens maps to the empty vector.
    pub fn featurize(&self, tokens: &[String]) -> FeatureVector {
        if tokens.is_empty() {
            return FeatureVector::default();
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in tokens {
            if let Some(i) = self.index_of(t) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let len = tokens.len() as f64;
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, c)| (i, c as f64 / len * self.idf[i]))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        FeatureVector { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn corpus() -> Vec<Vec<String>> {
        vec![tokenize("a b"), tokenize("a c")]
    }

    #[test]
    fn idf_values() {
        let v = build_vocabulary(&corpus(), 1, 100).unwrap();
        assert_eq!(v.idf("a"), Some(0.0));
        assert_eq!(v.idf("b"), Some(2f64.ln()));
        assert_eq!(v.idf("c"), Some(2f64.ln()));
    }

    #[test]
    fn min_df_above_corpus_size() {
        let v = build_vocabulary(&corpus(), 3, 100).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn max_vocab_keeps_highest_df() {
        let v = build_vocabulary(&corpus(), 1, 1).unwrap();
        assert_eq!(v.tokens(), ["a"]);
    }

    #[test]
    fn empty_corpus_error() {
        assert!(build_vocabulary(&[], 1, 10).is_err());
    }

    #[test]
    fn featurize_is_normalized_and_nonnegative() {
        let v = build_vocabulary(&[tokenize("x y z"), tokenize("x w"), tokenize("q")], 1, 100).unwrap();
        let f = v.featurize(&tokenize("x y y unknown"));
        let norm: f64 = f.entries.iter().map(|(_, w)| w * w).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(f.entries.iter().all(|&(i, w)| w >= 0.0 && w.is_finite() && i < v.len()));
        assert!(v.featurize(&[]).is_empty());
    }

    #[test]
    fn serde_round_trip_rebuilds_index() {
        let v = build_vocabulary(&corpus(), 1, 100).unwrap();
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.index_of("c"), v.index_of("c"));
    }
}
