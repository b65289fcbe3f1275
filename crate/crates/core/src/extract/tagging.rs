use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::features;
use super::glossary::RankAnnotation;
use super::index::{Candidate, EsaIndex};
use super::ranker::{RankGroup, RankerModel};
use crate::error::{Error, Result};

pub const MENTION_KNOWLEDGE: &str = "mention_knowledge";
pub const MIN_RECALL: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tag {
    pub paper_id: String,
    pub entity_id: String,
    pub score: f64,
}

impl Tag {
    pub fn to_line(&self) -> String {
        format!("{}\t{MENTION_KNOWLEDGE}\t{}", self.paper_id, self.entity_id)
    }
}

/// Ranker score of every retrieved candidate of one abstract, in retrieval order.
pub fn score_candidates(paper_id: &str, text: &str, index: &EsaIndex, model: &RankerModel, top_n: usize) -> Vec<Tag> {
    index
        .candidates(text, top_n)
        .iter()
        .filter_map(|c| {
            let entry = index.entry(&c.entity_id)?;
            Some(Tag {
                paper_id: paper_id.to_owned(),
                entity_id: c.entity_id.clone(),
                score: model.score(&features(c, entry, index)),
            })
        })
        .collect()
}

/// Candidates whose ranker score reaches `threshold`.
pub fn tag(paper_id: &str, text: &str, index: &EsaIndex, model: &RankerModel, threshold: f64, top_n: usize) -> Vec<Tag> {
    let mut tags = score_candidates(paper_id, text, index, model, top_n);
    tags.retain(|t| t.score >= threshold);
    tags
}

/// Set precision and recall of (paper_id, entity_id) tags against gold pairs.
pub fn evaluate_tagging(tags: &[(String, String)], gold: &BTreeSet<(String, String)>) -> Result<(f64, f64)> {
    if gold.is_empty() {
        return Err(Error::Empty("gold tag set"));
    }
    let predicted: BTreeSet<&(String, String)> = tags.iter().collect();
    let hits = predicted.iter().filter(|p| gold.contains(**p)).count() as f64;
    let precision = if predicted.is_empty() {
        0.0
    } else {
        hits / predicted.len() as f64
    };
    Ok((precision, hits / gold.len() as f64))
}

/// Sweep every distinct score as a threshold and keep the one with the best
/// precision among those reaching `min_recall`; ties go to the lower
/// threshold. With no threshold reaching `min_recall` the lowest score is used.
pub fn choose_threshold(scored: &[Tag], gold: &BTreeSet<(String, String)>, min_recall: f64) -> Result<f64> {
    if scored.is_empty() {
        return Err(Error::Empty("scored candidates"));
    }
    let mut thresholds: Vec<f64> = scored.iter().map(|t| t.score).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut best: Option<(f64, f64)> = None;
    for &t in &thresholds {
        let pairs: Vec<(String, String)> = scored
            .iter()
            .filter(|s| s.score >= t)
            .map(|s| (s.paper_id.clone(), s.entity_id.clone()))
            .collect();
        let (p, r) = evaluate_tagging(&pairs, gold)?;
        if r >= min_recall && best.is_none_or(|(bp, _)| p > bp) {
            best = Some((p, t));
        }
    }
    Ok(best.map_or(thresholds[0], |(_, t)| t))
}

/// Group annotations by paper and compute features of every annotated entity
/// against that paper's text. Entities unknown to the index are dropped.
pub fn build_rank_groups(index: &EsaIndex, texts: &BTreeMap<String, String>, annotations: &[RankAnnotation]) -> Vec<RankGroup> {
    let mut by_paper: BTreeMap<&str, Vec<&RankAnnotation>> = BTreeMap::new();
    for a in annotations {
        by_paper.entry(&a.paper_id).or_default().push(a);
    }
    let mut groups = Vec::new();
    for (paper_id, mut anns) in by_paper {
        let Some(text) = texts.get(paper_id) else {
            log::warn!("annotations reference unknown paper {paper_id}");
            continue;
        };
        anns.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
        let mut group = RankGroup {
            paper_id: paper_id.to_owned(),
            entity_ids: Vec::new(),
            features: Vec::new(),
            labels: Vec::new(),
        };
        for a in anns {
            let (Some(entry), Some(score)) = (index.entry(&a.entity_id), index.score_entity(text, &a.entity_id)) else {
                continue;
            };
            let c = Candidate {
                entity_id: a.entity_id.clone(),
                esa_score: score,
                matched_span: None,
            };
            group.features.push(features(&c, entry, index));
            group.entity_ids.push(a.entity_id.clone());
            group.labels.push(a.label);
        }
        if !group.labels.is_empty() {
            groups.push(group);
        }
    }
    groups
}

/// Deterministic train/validation split of paper ids.
pub fn split_papers(mut ids: Vec<String>, validation_fraction: f64, seed: u64) -> (Vec<String>, Vec<String>) {
    ids.sort();
    ids.dedup();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((ids.len() as f64) * validation_fraction).round() as usize;
    let train = ids.split_off(n_val.min(ids.len()));
    (train, ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::glossary::{EntitySource, GlossaryEntry};

    fn pair(p: &str, e: &str) -> (String, String) {
        (p.into(), e.into())
    }

    fn t(p: &str, e: &str, s: f64) -> Tag {
        Tag {
            paper_id: p.into(),
            entity_id: e.into(),
            score: s,
        }
    }

    #[test]
    fn precision_recall_hand_count() {
        let gold: BTreeSet<_> = [pair("p", "a"), pair("p", "b"), pair("q", "a"), pair("q", "c")].into();
        let (p, r) = evaluate_tagging(&[pair("p", "a"), pair("p", "z")], &gold).unwrap();
        assert_eq!((p, r), (0.5, 0.25));
        let all: Vec<_> = gold.iter().cloned().collect();
        assert_eq!(evaluate_tagging(&all, &gold).unwrap(), (1.0, 1.0));
        assert!(evaluate_tagging(&all, &BTreeSet::new()).is_err());
    }

    #[test]
    fn sweep_prefers_precision() {
        let scored = vec![t("p", "a", 3.0), t("p", "b", 2.0), t("p", "x", 1.5), t("p", "c", 1.0), t("p", "y", 0.5)];
        let gold: BTreeSet<_> = [pair("p", "a"), pair("p", "b"), pair("p", "c")].into();
        // 3.0 gives (1, 1/3) and 2.0 gives (1, 2/3): tie goes to the lower one
        assert_eq!(choose_threshold(&scored, &gold, 0.2).unwrap(), 2.0);
        // nothing reaches full recall except thresholds <= 1.0
        assert_eq!(choose_threshold(&scored, &gold, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn sweep_falls_back_to_lowest() {
        let scored = vec![t("p", "x", 2.0), t("p", "y", 1.0)];
        let gold: BTreeSet<_> = [pair("p", "a")].into();
        assert_eq!(choose_threshold(&scored, &gold, 0.2).unwrap(), 1.0);
    }

    fn setup() -> (EsaIndex, RankerModel) {
        let e = |id: &str, name: &str, d: &str| GlossaryEntry {
            entity_id: id.into(),
            name: name.into(),
            description: d.into(),
            discipline: 10,
            source: EntitySource::Wiki,
        };
        let idx = EsaIndex::build(vec![
            e("k1", "spike protein", "spike protein of the coronavirus"),
            e("k2", "vaccine", "vaccine induces antibodies"),
            e("k3", "lockdown", "lockdown policy mobility"),
        ])
        .unwrap();
        (idx, RankerModel::init(8, 1.0, 3).unwrap())
    }

    #[test]
    fn infinite_threshold_is_empty() {
        let (idx, m) = setup();
        assert!(tag("p", "the vaccine and spike protein", &idx, &m, f64::INFINITY, 50).is_empty());
    }

    #[test]
    fn threshold_monotone() {
        let (idx, m) = setup();
        let text = "the vaccine induces antibodies to the spike protein under lockdown";
        let scores: Vec<f64> = score_candidates("p", text, &idx, &m, 50).iter().map(|t| t.score).collect();
        assert_eq!(scores.len(), 3);
        for &t1 in &scores {
            for &t2 in &scores {
                if t2 >= t1 {
                    let hi: Vec<_> = tag("p", text, &idx, &m, t2, 50).into_iter().map(|t| t.entity_id).collect();
                    let lo: Vec<_> = tag("p", text, &idx, &m, t1, 50).into_iter().map(|t| t.entity_id).collect();
                    assert!(hi.iter().all(|e| lo.contains(e)));
                }
            }
        }
    }

    #[test]
    fn tag_line_format() {
        assert_eq!(t("p1", "k9", 0.0).to_line(), "p1\tmention_knowledge\tk9");
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let ids: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
        let (a, b) = split_papers(ids.clone(), 0.3, 5);
        assert_eq!((a.len(), b.len()), (14, 6));
        assert_eq!(split_papers(ids, 0.3, 5), (a.clone(), b.clone()));
        assert!(a.iter().all(|x| !b.contains(x)));
    }
}
