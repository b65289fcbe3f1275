use std::collections::{BTreeMap, HashMap};
use std::fs;

use serde_json::Value;

use super::layout::DataDir;
use crate::disciplines::DISCIPLINES;
use crate::error::{Error, Result};
use crate::geo::{GeoIndex, GeoPoint, DEFAULT_INDEX_PRECISION};
use crate::kgstore::{replay_log, ConceptKind, KgStore, RelationKind};
use crate::netsci::{build_network, NetworkKind, NetworkReportRow};

/// Searchable view of one paper node.
#[derive(Debug, Clone)]
pub(crate) struct PaperEntry {
    pub id: String,
    pub title: String,
    pub year: i64,
    pub disciplines: Vec<usize>,
    pub geohashes: Vec<String>,
    // lowercased title and abstract, matched separately
    pub title_lc: String,
    pub abstract_lc: String,
}

/// Immutable state behind the API: the graph plus the indexes derived from it.
#[derive(Debug)]
pub struct Snapshot {
    pub(crate) kg: KgStore,
    pub(crate) geo: GeoIndex,
    /// Sorted by year descending, then id.
    pub(crate) papers: Vec<PaperEntry>,
    pub(crate) by_id: HashMap<String, usize>,
    pub(crate) networks: BTreeMap<NetworkKind, Vec<NetworkReportRow>>,
}

fn str_prop<'a>(props: &'a BTreeMap<String, Value>, key: &str) -> &'a str {
    props.get(key).and_then(Value::as_str).unwrap_or("")
}

fn discipline_index(kg: &KgStore, id: &str) -> Option<usize> {
    let n = kg.node(id)?;
    let i = n.properties.get("index")?.as_u64()? as usize;
    (n.kind == ConceptKind::Discipline && i < DISCIPLINES.len()).then_some(i)
}

pub(crate) fn location_point(kg: &KgStore, id: &str) -> Option<GeoPoint> {
    let n = kg.node(id)?;
    let lat = n.properties.get("lat")?.as_f64()?;
    let lon = n.properties.get("lon")?.as_f64()?;
    GeoPoint::new(lat, lon).ok()
}

impl Snapshot {
    /// Derive the indexes from a graph. Network statistics come from
    /// `networks` when given and are otherwise computed without fits.
    pub fn from_kg(kg: KgStore, networks: Option<Vec<NetworkReportRow>>) -> Result<Self> {
        let mut geo = GeoIndex::new(DEFAULT_INDEX_PRECISION)?;
        let mut papers = Vec::new();
        for n in kg.nodes().filter(|n| n.kind == ConceptKind::Paper) {
            let title = str_prop(&n.properties, "title");
            let abstract_text = str_prop(&n.properties, "abstract");
            geo.add_paper(&n.id, title, abstract_text);
            let mut disciplines = Vec::new();
            for (kind, target) in kg.outgoing(&n.id) {
                match kind {
                    RelationKind::BelongsTo => disciplines.extend(discipline_index(&kg, target)),
                    RelationKind::MentionLocation => {
                        if let Some(p) = location_point(&kg, target) {
                            let name = target.strip_prefix("location:").unwrap_or(target);
                            geo.add_point(&n.id, name, p)?;
                        }
                    }
                    _ => {}
                }
            }
            disciplines.sort_unstable();
            disciplines.dedup();
            papers.push(PaperEntry {
                id: n.id.clone(),
                title: title.to_owned(),
                year: n.properties.get("year").and_then(Value::as_i64).unwrap_or(0),
                disciplines,
                geohashes: geo.geohashes_of(&n.id).into_iter().map(|g| g.as_str().to_owned()).collect(),
                title_lc: title.to_lowercase(),
                abstract_lc: abstract_text.to_lowercase(),
            });
        }
        papers.sort_by(|a, b| b.year.cmp(&a.year).then_with(|| a.id.cmp(&b.id)));
        let by_id = papers.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();

        let mut by_kind: BTreeMap<NetworkKind, Vec<NetworkReportRow>> = BTreeMap::new();
        match networks {
            Some(rows) => {
                for r in rows {
                    by_kind.entry(r.network).or_default().push(r);
                }
            }
            None => {
                for kind in NetworkKind::ALL {
                    let g = build_network(&kg, kind);
                    let rows = g
                        .degree_stats()
                        .into_iter()
                        .map(|stats| NetworkReportRow {
                            network: kind,
                            stats,
                            fit: None,
                        })
                        .collect();
                    by_kind.insert(kind, rows);
                }
            }
        }
        Ok(Snapshot {
            kg,
            geo,
            papers,
            by_id,
            networks: by_kind,
        })
    }

    /// Load the store log and, when present, the network report from a data
    /// directory.
    pub fn load(dir: &DataDir) -> Result<Self> {
        let kg = replay_log(&dir.kg_log())?;
        let report = dir.network_report();
        let networks = if report.exists() {
            let raw = fs::read_to_string(&report).map_err(|e| Error::read(&report, e))?;
            let rows: Vec<NetworkReportRow> = serde_json::from_str(&raw).map_err(|e| Error::Format {
                what: "network report",
                message: format!("{}: {e}", report.display()),
            })?;
            Some(rows)
        } else {
            None
        };
        Self::from_kg(kg, networks)
    }

    pub fn kg(&self) -> &KgStore {
        &self.kg
    }

    pub fn geo(&self) -> &GeoIndex {
        &self.geo
    }

    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }
}
