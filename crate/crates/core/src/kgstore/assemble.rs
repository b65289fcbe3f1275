use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{ConceptKind, RelationKind};
use super::store::{Edge, KgStore, Node};
use crate::corpus::{match_places, FusedCorpus, LineWarning, LocationMention, VenueKind};
use crate::disciplines::DISCIPLINES;
use crate::error::{Error, Result};
use crate::extract::GlossaryEntry;
use crate::geo::{encode, Gazetteer, GeoPoint, DEFAULT_INDEX_PRECISION};
use crate::relate::RelationLabel;

/// A classified relation between two knowledge entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeRelation {
    pub h: String,
    pub label: RelationLabel,
    pub t: String,
    pub paper_id: String,
}

/// A sameAs or subClassOf link between knowledge entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLink {
    pub source: String,
    pub kind: RelationKind,
    pub target: String,
}

#[derive(Default)]
pub struct KgInputs<'a> {
    pub corpus: Option<&'a FusedCorpus>,
    /// Paper id with its predicted discipline indices.
    pub disciplines: &'a [(String, Vec<usize>)],
    pub glossary: &'a [GlossaryEntry],
    /// (paper_id, entity_id) mention_knowledge tags.
    pub tags: &'a [(String, String)],
    pub relations: &'a [KnowledgeRelation],
    pub locations: &'a [LocationMention],
    pub links: &'a [EntityLink],
    /// Used to place organizations by the place names in their names.
    pub gazetteer: Option<&'a Gazetteer>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembleReport {
    /// Inputs that referenced unknown nodes and were left out.
    pub skipped: Vec<String>,
}

pub fn discipline_node_id(index: usize) -> String {
    format!("discipline:{index:02}")
}

pub fn location_node_id(canonical_name: &str) -> String {
    format!("location:{canonical_name}")
}

fn relation_kind(label: RelationLabel) -> Option<RelationKind> {
    match label {
        RelationLabel::IsA => Some(RelationKind::IsA),
        RelationLabel::Impact => Some(RelationKind::Impact),
        RelationLabel::RelatedTo => Some(RelationKind::RelatedTo),
        RelationLabel::Unknown => None,
    }
}

fn location_node(name: &str, lat: f64, lon: f64) -> Result<Node> {
    let gh = encode(GeoPoint::new(lat, lon)?, DEFAULT_INDEX_PRECISION)?;
    Ok(Node::new(location_node_id(name), ConceptKind::Location)
        .with("name", name)
        .with("lat", lat)
        .with("lon", lon)
        .with("geohash", gh.as_str()))
}

/// Build the knowledge graph from the outputs of the other stages. Edges whose
/// endpoints are unknown are skipped and reported; schema violations are errors.
pub fn assemble(inputs: &KgInputs<'_>) -> Result<(KgStore, AssembleReport)> {
    let mut kg = KgStore::new();
    let mut report = AssembleReport::default();
    for (i, name) in DISCIPLINES.iter().enumerate() {
        kg.upsert_node(Node::new(discipline_node_id(i), ConceptKind::Discipline).with("name", *name).with("index", i))?;
    }
    let mut edge = |kg: &mut KgStore, e: Edge| -> Result<()> {
        if kg.node(&e.source).is_none() || kg.node(&e.target).is_none() {
            report.skipped.push(format!("{} {} {}", e.source, e.kind, e.target));
            return Ok(());
        }
        kg.upsert_edge(e).map(|_| ())
    };

    if let Some(corpus) = inputs.corpus {
        for a in &corpus.authors {
            kg.upsert_node(Node::new(&a.id, ConceptKind::Author).with("name", a.display_name.as_str()))?;
        }
        for o in &corpus.orgs {
            kg.upsert_node(Node::new(&o.id, ConceptKind::Organization).with("name", o.display_name.as_str()))?;
        }
        for v in &corpus.venues {
            let kind = match v.kind {
                VenueKind::Journal => ConceptKind::Journal,
                VenueKind::Conference => ConceptKind::Conference,
                VenueKind::Preprint => ConceptKind::Preprint,
            };
            kg.upsert_node(Node::new(&v.entity.id, kind).with("name", v.entity.display_name.as_str()))?;
        }
        for p in &corpus.papers {
            let mut n = Node::new(&p.paper_id, ConceptKind::Paper)
                .with("title", p.title.as_str())
                .with("abstract", p.r#abstract.as_str())
                .with("year", p.year)
                .with("type", serde_json::to_value(p.paper_type).map_err(|e| Error::invalid(e.to_string()))?);
            if let Some(doi) = &p.doi {
                n = n.with("doi", doi.as_str());
            }
            kg.upsert_node(n)?;
        }
        for p in &corpus.papers {
            for a in &p.author_ids {
                edge(&mut kg, Edge::new(&p.paper_id, RelationKind::IsWrittenBy, a))?;
            }
            for (a, o) in &p.affiliations {
                edge(&mut kg, Edge::new(a, RelationKind::WorkIn, o))?;
            }
            if let Some(v) = &p.venue_id {
                edge(&mut kg, Edge::new(&p.paper_id, RelationKind::IsPublishedIn, v))?;
            }
            for cited in &p.cites {
                edge(&mut kg, Edge::new(cited, RelationKind::IsCitedBy, &p.paper_id))?;
            }
        }
        if let Some(gaz) = inputs.gazetteer {
            for o in &corpus.orgs {
                if let Some(m) = match_places(&[o.display_name.as_str()], gaz).into_iter().next() {
                    kg.upsert_node(location_node(&m.canonical_name, m.point.lat, m.point.lon)?)?;
                    edge(&mut kg, Edge::new(&o.id, RelationKind::IsLocatedIn, location_node_id(&m.canonical_name)))?;
                }
            }
        }
    }

    for (paper, labels) in inputs.disciplines {
        for &l in labels {
            edge(&mut kg, Edge::new(paper, RelationKind::BelongsTo, discipline_node_id(l)))?;
        }
    }
    for g in inputs.glossary {
        kg.upsert_node(
            Node::new(&g.entity_id, ConceptKind::Knowledge)
                .with("name", g.name.as_str())
                .with("source", g.source.as_str()),
        )?;
        edge(&mut kg, Edge::new(&g.entity_id, RelationKind::BelongsTo, discipline_node_id(g.discipline)))?;
    }
    for l in inputs.links {
        // link targets outside the glossary are external entities
        if kg.node(&l.target).is_none() {
            kg.upsert_node(Node::new(&l.target, ConceptKind::Knowledge).with("external", true))?;
        }
        edge(&mut kg, Edge::new(&l.source, l.kind, &l.target))?;
    }
    for (paper, entity) in inputs.tags {
        edge(&mut kg, Edge::new(paper, RelationKind::MentionKnowledge, entity))?;
    }
    for r in inputs.relations {
        if let Some(kind) = relation_kind(r.label) {
            let mut e = Edge::new(&r.h, kind, &r.t);
            e.provenance = Some(r.paper_id.clone());
            edge(&mut kg, e)?;
        }
    }
    for m in inputs.locations {
        kg.upsert_node(location_node(&m.canonical_name, m.lat, m.lon)?)?;
        edge(&mut kg, Edge::new(&m.paper_id, RelationKind::MentionLocation, location_node_id(&m.canonical_name)))?;
    }
    kg.check_integrity()?;
    if !report.skipped.is_empty() {
        log::warn!("{} edges referenced unknown nodes and were skipped", report.skipped.len());
    }
    Ok((kg, report))
}

/// Parse `source<TAB>sameAs|subClassOf<TAB>target` lines.
pub fn parse_links(raw: &str) -> (Vec<EntityLink>, Vec<LineWarning>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        let kind = f.get(1).and_then(|k| k.parse::<RelationKind>().ok());
        match (f.as_slice(), kind) {
            ([s, _, t], Some(kind @ (RelationKind::SameAs | RelationKind::SubClassOf))) if !s.is_empty() && !t.is_empty() => {
                out.push(EntityLink {
                    source: s.to_string(),
                    kind,
                    target: t.to_string(),
                })
            }
            _ => warnings.push(LineWarning {
                line: i + 1,
                message: "expected source, sameAs or subClassOf, target".into(),
            }),
        }
    }
    (out, warnings)
}

pub fn load_links(path: &Path) -> Result<(Vec<EntityLink>, Vec<LineWarning>)> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    Ok(parse_links(&raw))
}

/// Parse `h<TAB>label<TAB>t<TAB>paper_id` relation edge lines.
pub fn parse_relation_edges(raw: &str) -> (Vec<KnowledgeRelation>, Vec<LineWarning>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let label = f.get(1).and_then(|l| l.parse::<RelationLabel>().ok());
        match (f.as_slice(), label) {
            ([h, _, t, p], Some(label)) => out.push(KnowledgeRelation {
                h: h.to_string(),
                label,
                t: t.to_string(),
                paper_id: p.to_string(),
            }),
            _ => warnings.push(LineWarning {
                line: i + 1,
                message: "expected head, label, tail, paper_id".into(),
            }),
        }
    }
    (out, warnings)
}
