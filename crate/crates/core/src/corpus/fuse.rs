use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ingest::{PaperType, SourceId, SourceRecord};
use super::normalize::{normalize_name, normalize_title};
use crate::error::{Error, Result};
use crate::text::stable_id;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doi: Option<String>,
    pub title: String,
    pub r#abstract: String,
    pub year: i32,
    #[serde(rename = "type")]
    pub paper_type: PaperType,
    pub author_ids: Vec<String>,
    pub org_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue_id: Option<String>,
    pub provenance: BTreeSet<(SourceId, String)>,
    /// Paper ids of cited papers present in the fused corpus.
    #[serde(default)]
    pub cites: Vec<String>,
    /// (author_id, org_id) affiliation pairs asserted by this paper.
    #[serde(default)]
    pub affiliations: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalEntity {
    pub id: String,
    pub display_name: String,
    pub normalized_key: String,
    pub aliases: BTreeSet<String>,
}

pub type CanonicalAuthor = CanonicalEntity;
pub type CanonicalOrg = CanonicalEntity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VenueKind {
    Journal,
    Conference,
    Preprint,
}

impl From<PaperType> for VenueKind {
    fn from(t: PaperType) -> Self {
        match t {
            PaperType::Article => VenueKind::Journal,
            PaperType::Proceeding => VenueKind::Conference,
            PaperType::Preprint => VenueKind::Preprint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalVenue {
    #[serde(flatten)]
    pub entity: CanonicalEntity,
    pub kind: VenueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConflict {
    pub doi: String,
    pub years: Vec<i32>,
    pub kept: i32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusedCorpus {
    pub papers: Vec<PaperRecord>,
    pub authors: Vec<CanonicalAuthor>,
    pub orgs: Vec<CanonicalOrg>,
    pub venues: Vec<CanonicalVenue>,
    pub conflicts: Vec<FusionConflict>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum DedupKey {
    Doi(String),
    TitleYear(String, i32),
}

impl DedupKey {
    fn of(r: &SourceRecord) -> Self {
        match r.doi.as_deref().map(normalize_doi) {
            Some(doi) if !doi.is_empty() => DedupKey::Doi(doi),
            _ => {
                let mut t = normalize_title(&r.title);
                if t.is_empty() {
                    t = r.title.trim().to_lowercase();
                }
                DedupKey::TitleYear(t, r.year)
            }
        }
    }

    fn paper_id(&self) -> String {
        match self {
            DedupKey::Doi(d) => stable_id(&["doi", d]),
            DedupKey::TitleYear(t, y) => stable_id(&["title", t, &y.to_string()]),
        }
    }
}

pub fn normalize_doi(doi: &str) -> String {
    let d = doi.trim().to_lowercase();
    d.strip_prefix("https://doi.org/")
        .or_else(|| d.strip_prefix("doi:"))
        .unwrap_or(&d)
        .to_owned()
}

/// Most frequent year; ties go to the earliest.
fn modal_year(years: &[i32]) -> i32 {
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for &y in years {
        *counts.entry(y).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts.into_iter().find(|&(_, c)| c == best).map(|(y, _)| y).expect("non-empty group")
}

#[derive(Default)]
struct EntityTable {
    by_key: BTreeMap<String, CanonicalEntity>,
}

impl EntityTable {
    fn intern(&mut self, namespace: &str, raw: &str) -> Option<String> {
        let key = match normalize_name(raw) {
            Ok(k) => k,
            Err(e) => {
                log::warn!("skipping {namespace} name {raw:?}: {e}");
                return None;
            }
        };
        let entry = self.by_key.entry(key.clone()).or_insert_with(|| CanonicalEntity {
            id: stable_id(&[namespace, &key]),
            display_name: raw.trim().to_owned(),
            normalized_key: key,
            aliases: BTreeSet::new(),
        });
        entry.aliases.insert(raw.trim().to_owned());
        Some(entry.id.clone())
    }
}

fn push_unique(v: &mut Vec<String>, id: String) {
    if !v.contains(&id) {
        v.push(id);
    }
}

/// Merge validated source feeds into one deduplicated corpus. Records sharing a
/// DOI, or sharing (normalized title, year) when the DOI is absent, become a
/// single paper carrying the union of their provenance.
pub fn fuse(sources: &[Vec<SourceRecord>]) -> FusedCorpus {
    let mut groups: BTreeMap<DedupKey, Vec<&SourceRecord>> = BTreeMap::new();
    for r in sources.iter().flatten() {
        groups.entry(DedupKey::of(r)).or_default().push(r);
    }

    let mut authors = EntityTable::default();
    let mut orgs = EntityTable::default();
    let mut venues = EntityTable::default();
    let mut venue_kinds: HashMap<String, VenueKind> = HashMap::new();
    let mut conflicts = Vec::new();
    let mut papers = Vec::with_capacity(groups.len());
    let mut pending_refs: Vec<BTreeSet<String>> = Vec::with_capacity(groups.len());

    for (key, mut group) in groups {
        group.sort_by(|a, b| (a.source, &a.id).cmp(&(b.source, &b.id)));
        let first = group[0];
        let years: Vec<i32> = group.iter().map(|r| r.year).collect();
        let year = modal_year(&years);
        if let DedupKey::Doi(doi) = &key {
            let distinct: BTreeSet<i32> = years.iter().copied().collect();
            if distinct.len() > 1 {
                log::warn!("conflicting years {distinct:?} for doi {doi}; keeping {year}");
                conflicts.push(FusionConflict {
                    doi: doi.clone(),
                    years: distinct.into_iter().collect(),
                    kept: year,
                });
            }
        }
        let abstract_text = group
            .iter()
            .map(|r| r.r#abstract.trim())
            .fold("", |best, a| if a.len() > best.len() { a } else { best });

        let mut author_ids = Vec::new();
        let mut org_ids = Vec::new();
        let mut affiliations = BTreeSet::new();
        let mut venue_id = None;
        let mut refs = BTreeSet::new();
        for r in &group {
            let rec_authors: Vec<Option<String>> = r.authors.iter().map(|a| authors.intern("author", a)).collect();
            let rec_orgs: Vec<Option<String>> = r.orgs.iter().map(|o| orgs.intern("org", o)).collect();
            // Affiliation rule: positional when the lists align, otherwise a
            // single organization covers every author.
            if rec_orgs.len() == rec_authors.len() {
                for (a, o) in rec_authors.iter().zip(&rec_orgs) {
                    if let (Some(a), Some(o)) = (a, o) {
                        affiliations.insert((a.clone(), o.clone()));
                    }
                }
            } else if let [Some(o)] = rec_orgs.as_slice() {
                for a in rec_authors.iter().flatten() {
                    affiliations.insert((a.clone(), o.clone()));
                }
            }
            rec_authors.into_iter().flatten().for_each(|a| push_unique(&mut author_ids, a));
            rec_orgs.into_iter().flatten().for_each(|o| push_unique(&mut org_ids, o));
            if venue_id.is_none() && !r.venue.trim().is_empty() {
                if let Some(v) = venues.intern("venue", &r.venue) {
                    venue_kinds.entry(v.clone()).or_insert_with(|| r.paper_type.into());
                    venue_id = Some(v);
                }
            }
            refs.extend(r.references.iter().map(|d| normalize_doi(d)));
        }

        papers.push(PaperRecord {
            paper_id: key.paper_id(),
            doi: match &key {
                DedupKey::Doi(d) => Some(d.clone()),
                DedupKey::TitleYear(..) => None,
            },
            title: first.title.trim().to_owned(),
            r#abstract: abstract_text.to_owned(),
            year,
            paper_type: first.paper_type,
            author_ids,
            org_ids,
            venue_id,
            provenance: group.iter().map(|r| (r.source, r.id.clone())).collect(),
            cites: Vec::new(),
            affiliations: affiliations.into_iter().collect(),
        });
        pending_refs.push(refs);
    }

    let by_doi: HashMap<String, String> = papers
        .iter()
        .filter_map(|p| p.doi.clone().map(|d| (d, p.paper_id.clone())))
        .collect();
    for (paper, refs) in papers.iter_mut().zip(pending_refs) {
        let mut cites: Vec<String> = refs
            .iter()
            .filter_map(|d| by_doi.get(d))
            .filter(|id| **id != paper.paper_id)
            .cloned()
            .collect();
        cites.sort();
        cites.dedup();
        paper.cites = cites;
    }
    papers.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));

    let sorted = |t: EntityTable| {
        let mut v: Vec<CanonicalEntity> = t.by_key.into_values().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    };
    let venues = sorted(venues)
        .into_iter()
        .map(|entity| CanonicalVenue {
            kind: venue_kinds[&entity.id],
            entity,
        })
        .collect();
    FusedCorpus {
        papers,
        authors: sorted(authors),
        orgs: sorted(orgs),
        venues,
        conflicts,
    }
}

impl FusedCorpus {
    /// One source row per fused paper, so a fused corpus can be fed back into
    /// [`fuse`].
    pub fn to_source_records(&self) -> Vec<SourceRecord> {
        let name = |table: &[CanonicalEntity]| -> HashMap<String, String> {
            table.iter().map(|e| (e.id.clone(), e.display_name.clone())).collect()
        };
        let authors = name(&self.authors);
        let orgs = name(&self.orgs);
        let venues: HashMap<&str, &str> = self
            .venues
            .iter()
            .map(|v| (v.entity.id.as_str(), v.entity.display_name.as_str()))
            .collect();
        let dois: HashMap<&str, &str> = self
            .papers
            .iter()
            .filter_map(|p| p.doi.as_deref().map(|d| (p.paper_id.as_str(), d)))
            .collect();
        self.papers
            .iter()
            .map(|p| {
                let (source, id) = p.provenance.iter().next().cloned().expect("provenance is non-empty");
                SourceRecord {
                    source,
                    id,
                    doi: p.doi.clone(),
                    title: p.title.clone(),
                    r#abstract: p.r#abstract.clone(),
                    year: p.year,
                    authors: p.author_ids.iter().map(|a| authors[a].clone()).collect(),
                    orgs: p.org_ids.iter().map(|o| orgs[o].clone()).collect(),
                    venue: p.venue_id.as_deref().map(|v| venues[v].to_owned()).unwrap_or_default(),
                    paper_type: p.paper_type,
                    references: p.cites.iter().filter_map(|c| dois.get(c.as_str()).map(|d| d.to_string())).collect(),
                }
            })
            .collect()
    }

    pub fn counts(&self) -> (usize, usize, usize, usize) {
        (self.papers.len(), self.authors.len(), self.orgs.len(), self.venues.len())
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
        write_jsonl(&dir.join("papers.jsonl"), &self.papers)?;
        write_jsonl(&dir.join("authors.jsonl"), &self.authors)?;
        write_jsonl(&dir.join("orgs.jsonl"), &self.orgs)?;
        write_jsonl(&dir.join("venues.jsonl"), &self.venues)?;
        write_jsonl(&dir.join("conflicts.jsonl"), &self.conflicts)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        Ok(FusedCorpus {
            papers: read_jsonl(&dir.join("papers.jsonl"))?,
            authors: read_jsonl(&dir.join("authors.jsonl"))?,
            orgs: read_jsonl(&dir.join("orgs.jsonl"))?,
            venues: read_jsonl(&dir.join("venues.jsonl"))?,
            conflicts: read_jsonl(&dir.join("conflicts.jsonl"))?,
        })
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, r).map_err(|e| Error::invalid(e.to_string()))?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::write(path, e))?;
    f.write_all(&buf).map_err(|e| Error::write(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Format {
                what: "jsonl",
                message: format!("{}:{}: {e}", path.display(), i + 1),
            })
        })
        .collect()
}
