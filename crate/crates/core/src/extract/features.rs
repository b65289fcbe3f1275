use serde::{Deserialize, Serialize};

use super::glossary::GlossaryEntry;
use super::index::{Candidate, EsaIndex};
use crate::text::tokenize;

pub const NUM_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankFeatures {
    pub tfidf_score: f64,
    pub length: f64,
    pub complexity: f64,
    pub letter_count: f64,
}

impl RankFeatures {
    pub fn as_array(&self) -> [f64; NUM_FEATURES] {
        [self.tfidf_score, self.length, self.complexity, self.letter_count]
    }
}

/// Ranking features of a candidate: its retrieval score, the whitespace token
/// count of the entity name, the mean description-corpus idf of the name's
/// tokens (tokens absent from every description are skipped), and the number of
/// alphabetic characters in the name.
pub fn features(candidate: &Candidate, entry: &GlossaryEntry, index: &EsaIndex) -> RankFeatures {
    let idfs: Vec<f64> = tokenize(&entry.name).iter().filter_map(|t| index.idf(t)).collect();
    let complexity = if idfs.is_empty() {
        0.0
    } else {
        idfs.iter().sum::<f64>() / idfs.len() as f64
    };
    RankFeatures {
        tfidf_score: candidate.esa_score,
        length: entry.name.split_whitespace().count().max(1) as f64,
        complexity,
        letter_count: entry.name.chars().filter(|c| c.is_alphabetic()).count() as f64,
    }
}
