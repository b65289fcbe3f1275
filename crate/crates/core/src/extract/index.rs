use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::glossary::GlossaryEntry;
use crate::error::{Error, Result};
use crate::text::{find_word_ci, tokenize};

pub const DEFAULT_TOP_N: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub entity_id: String,
    pub esa_score: f64,
    /// Byte range of a verbatim (case-insensitive, whole-word) occurrence of
    /// the entity name in the query.
    pub matched_span: Option<Range<usize>>,
}

/// Inverted tf-idf index over glossary descriptions. Description vectors are
/// raw term counts times idf = ln(N / df), L2-normalized, so retrieval scores
/// are cosine similarities.
#[derive(Debug, Clone)]
pub struct EsaIndex {
    entries: Vec<GlossaryEntry>,
    by_id: HashMap<String, usize>,
    idf: HashMap<String, f64>,
    postings: HashMap<String, Vec<(usize, f64)>>,
}

fn weighted(tokens: &[String], idf: &HashMap<String, f64>) -> BTreeMap<String, f64> {
    let mut tf: BTreeMap<String, f64> = BTreeMap::new();
    for t in tokens {
        if idf.contains_key(t) {
            *tf.entry(t.clone()).or_default() += 1.0;
        }
    }
    let mut v: BTreeMap<String, f64> = tf
        .into_iter()
        .map(|(t, c)| {
            let w = c * idf[&t];
            (t, w)
        })
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let norm = v.values().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.values_mut().for_each(|w| *w /= norm);
    }
    v
}

impl EsaIndex {
    pub fn build(glossary: Vec<GlossaryEntry>) -> Result<Self> {
        if glossary.is_empty() {
            return Err(Error::Empty("glossary"));
        }
        let mut by_id = HashMap::new();
        for (i, e) in glossary.iter().enumerate() {
            if by_id.insert(e.entity_id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate entity id {}", e.entity_id)));
            }
        }
        let docs: Vec<Vec<String>> = glossary.iter().map(|e| tokenize(&e.description)).collect();
        let mut df: HashMap<String, usize> = HashMap::new();
        for d in &docs {
            let mut uniq: Vec<&String> = d.iter().collect();
            uniq.sort();
            uniq.dedup();
            for t in uniq {
                *df.entry(t.clone()).or_default() += 1;
            }
        }
        let n = glossary.len() as f64;
        let idf: HashMap<String, f64> = df.into_iter().map(|(t, c)| (t, (n / c as f64).ln())).collect();
        let mut postings: HashMap<String, Vec<(usize, f64)>> = HashMap::new();
        for (i, d) in docs.iter().enumerate() {
            for (t, w) in weighted(d, &idf) {
                postings.entry(t).or_default().push((i, w));
            }
        }
        Ok(EsaIndex {
            entries: glossary,
            by_id,
            idf,
            postings,
        })
    }

    pub fn entries(&self) -> &[GlossaryEntry] {
        &self.entries
    }

    pub fn entry(&self, entity_id: &str) -> Option<&GlossaryEntry> {
        self.by_id.get(entity_id).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// idf of a token over the description corpus; `None` if it never occurs.
    pub fn idf(&self, token: &str) -> Option<f64> {
        self.idf.get(token).copied()
    }

    fn scores(&self, query: &str) -> HashMap<usize, f64> {
        let q = weighted(&tokenize(query), &self.idf);
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for (t, wq) in &q {
            if let Some(list) = self.postings.get(t) {
                for &(i, wd) in list {
                    *acc.entry(i).or_default() += wq * wd;
                }
            }
        }
        acc
    }

    /// Cosine similarity between `query` and one entity's description.
    pub fn score_entity(&self, query: &str, entity_id: &str) -> Option<f64> {
        let i = *self.by_id.get(entity_id)?;
        Some(self.scores(query).get(&i).copied().unwrap_or(0.0))
    }

    /// Entities with positive similarity to `query`, best first (ties by
    /// entity id), at most `top_n`.
    pub fn candidates(&self, query: &str, top_n: usize) -> Vec<Candidate> {
        let mut scored: Vec<(usize, f64)> = self.scores(query).into_iter().filter(|&(_, s)| s > 0.0).collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.entries[a.0].entity_id.cmp(&self.entries[b.0].entity_id))
        });
        scored.truncate(top_n);
        scored
            .into_iter()
            .map(|(i, s)| Candidate {
                entity_id: self.entries[i].entity_id.clone(),
                esa_score: s,
                matched_span: find_word_ci(query, &self.entries[i].name),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::glossary::EntitySource;

    pub(crate) fn entry(id: &str, name: &str, desc: &str) -> GlossaryEntry {
        GlossaryEntry {
            entity_id: id.into(),
            name: name.into(),
            description: desc.into(),
            discipline: 10,
            source: EntitySource::Glossary,
        }
    }

    #[test]
    fn disjoint_descriptions_are_orthogonal() {
        let idx = EsaIndex::build(vec![entry("a", "A", "red green"), entry("b", "B", "blue yellow")]).unwrap();
        assert_eq!(idx.score_entity("red green", "b"), Some(0.0));
        assert!((idx.score_entity("red green", "a").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_and_empty_rejected() {
        assert!(EsaIndex::build(vec![]).is_err());
        assert!(EsaIndex::build(vec![entry("a", "A", "x"), entry("a", "B", "y")]).is_err());
    }

    #[test]
    fn hand_tfidf_oracle() {
        // docs: d0 "virus spike protein", d1 "virus vaccine", d2 "vaccine trial trial"
        // idf: virus ln(3/2), spike ln3, protein ln3, vaccine ln(3/2), trial ln3
        let idx = EsaIndex::build(vec![
            entry("d0", "Spike", "virus spike protein"),
            entry("d1", "Vaccine", "virus vaccine"),
            entry("d2", "Trial", "vaccine trial trial"),
        ])
        .unwrap();
        let l3 = 3f64.ln();
        let l32 = 1.5f64.ln();
        let unit = |v: Vec<f64>| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        // term order: virus, spike, protein, vaccine, trial
        let d0 = unit(vec![l32, l3, l3, 0.0, 0.0]);
        let d1 = unit(vec![l32, 0.0, 0.0, l32, 0.0]);
        let d2 = unit(vec![0.0, 0.0, 0.0, l32, 2.0 * l3]);
        let q = unit(vec![l32, 0.0, 0.0, l32, l3]); // "virus vaccine trial"
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        for (id, d) in [("d0", &d0), ("d1", &d1), ("d2", &d2)] {
            let got = idx.score_entity("virus vaccine trial", id).unwrap();
            assert!((got - dot(&q, d)).abs() < 1e-12, "{id}");
        }
    }

    #[test]
    fn candidate_order_and_spans() {
        let idx = EsaIndex::build(vec![
            entry("e1", "Spike protein", "spike protein of the coronavirus"),
            entry("e2", "Vaccine", "vaccine induces antibodies"),
            entry("e3", "Antibody", "antibodies neutralize the virus"),
            entry("e4", "Lockdown", "lockdown policy mobility"),
            entry("e5", "Mobility", "mobility of people during lockdown"),
        ])
        .unwrap();
        let q = "The vaccine induces antibodies against the spike protein.";
        let c = idx.candidates(q, 50);
        let ids: Vec<&str> = c.iter().map(|c| c.entity_id.as_str()).collect();
        assert_eq!(ids, GOLDEN_ORDER);
        assert!(c.windows(2).all(|w| w[0].esa_score >= w[1].esa_score));
        assert!(c.iter().all(|c| c.esa_score > 0.0));
        let spike = c.iter().find(|c| c.entity_id == "e1").unwrap();
        assert_eq!(&q[spike.matched_span.clone().unwrap()], "spike protein");
        assert!(c.iter().find(|c| c.entity_id == "e3").unwrap().matched_span.is_none());
        assert_eq!(idx.candidates(q, 1).len(), 1);
        assert!(idx.candidates("zebra okapi", 5).is_empty());
        assert!(idx.candidates("", 5).is_empty());
    }

    // independent oracle: e2 0.6430, e1 0.5848, e3 0.2520
    const GOLDEN_ORDER: [&str; 3] = ["e2", "e1", "e3"];

    #[test]
    fn self_query_ranks_first() {
        let idx = EsaIndex::build(vec![
            entry("a", "A", "alpha beta gamma"),
            entry("b", "B", "delta epsilon"),
            entry("c", "C", "zeta eta theta"),
        ])
        .unwrap();
        assert_eq!(idx.candidates("delta epsilon", 3)[0].entity_id, "b");
    }
}
