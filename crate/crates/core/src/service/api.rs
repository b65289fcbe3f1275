use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::snapshot::{location_point, Snapshot};
use crate::disciplines::{self, DISCIPLINES};
use crate::geo::{encode, BoundingBox, DEFAULT_INDEX_PRECISION};
use crate::kgstore::{ConceptKind, PathQuery, RelationKind, MAX_HOPS};
use crate::netsci::{NetworkKind, NetworkReportRow};

pub const API_VERSION: &str = "1";
pub const MAX_LIMIT: usize = 500;
pub const DEFAULT_LIMIT: usize = 20;
pub const DEFAULT_DENSITY_PRECISION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiErrorKind {
    BadRequest,
    NotFound,
}

/// Error returned by every endpoint. Serializes as
/// `{"error": {"code": .., "message": ..}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub kind: ApiErrorKind,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            kind: ApiErrorKind::BadRequest,
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            kind: ApiErrorKind::NotFound,
            message: message.into(),
        }
    }

    pub fn status(&self) -> u16 {
        match self.kind {
            ApiErrorKind::BadRequest => 400,
            ApiErrorKind::NotFound => 404,
        }
    }

    pub fn body(&self) -> Value {
        serde_json::json!({ "error": { "code": self.kind, "message": self.message } })
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.status(), self.message)
    }
}

impl std::error::Error for ApiError {}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

/// Serialize a response body. Field order is fixed by the types and all maps
/// are ordered, so equal values give equal bytes.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("response types serialize infallibly")
}

/// Raw query-string parameters of `GET /search`; everything is validated by
/// [`SearchQuery::from_params`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub keyword: Option<String>,
    pub discipline: Option<String>,
    /// `west,south,east,north` in degrees.
    pub bbox: Option<String>,
    pub offset: Option<String>,
    pub limit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchQuery {
    pub keyword: String,
    pub discipline: Option<usize>,
    /// `[west, south, east, north]`; west > east wraps the antimeridian.
    pub bbox: Option<[f64; 4]>,
    pub offset: usize,
    pub limit: usize,
}

fn parse_count(name: &str, raw: Option<&str>, default: usize) -> ApiResult<usize> {
    match raw {
        None => Ok(default),
        Some(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| ApiError::bad_request(format!("{name} must be a non-negative integer, got {s:?}"))),
    }
}

pub fn parse_bbox(raw: &str) -> ApiResult<[f64; 4]> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(ApiError::bad_request(format!("bbox needs west,south,east,north, got {raw:?}")));
    }
    let mut out = [0.0; 4];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p
            .parse::<f64>()
            .map_err(|_| ApiError::bad_request(format!("bbox edge {p:?} is not a number")))?;
    }
    BoundingBox::split_antimeridian(out[1], out[3], out[0], out[2])
        .map_err(|e| ApiError::bad_request(format!("bbox: {e}")))?;
    Ok(out)
}

impl SearchQuery {
    pub fn from_params(p: &SearchParams) -> ApiResult<Self> {
        let keyword = p.keyword.as_deref().unwrap_or("").trim().to_owned();
        let discipline = match p.discipline.as_deref().map(str::trim).filter(|d| !d.is_empty()) {
            None => None,
            Some(d) => Some(
                disciplines::lookup(d).ok_or_else(|| ApiError::bad_request(format!("unknown discipline {d:?}")))?,
            ),
        };
        let bbox = p.bbox.as_deref().map(parse_bbox).transpose()?;
        let q = SearchQuery {
            keyword,
            discipline,
            bbox,
            offset: parse_count("offset", p.offset.as_deref(), 0)?,
            limit: parse_count("limit", p.limit.as_deref(), DEFAULT_LIMIT)?,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> ApiResult<()> {
        if self.limit == 0 || self.limit > MAX_LIMIT {
            return Err(ApiError::bad_request(format!("limit must be in 1..={MAX_LIMIT}")));
        }
        if self.keyword.is_empty() && self.bbox.is_none() {
            return Err(ApiError::bad_request("keyword is required unless a bbox is given"));
        }
        if self.discipline.is_some_and(|d| d >= DISCIPLINES.len()) {
            return Err(ApiError::bad_request("discipline index out of range"));
        }
        if let Some([w, s, e, n]) = self.bbox {
            BoundingBox::split_antimeridian(s, n, w, e).map_err(|e| ApiError::bad_request(format!("bbox: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaperSummary {
    pub id: String,
    pub title: String,
    pub year: i64,
    pub disciplines: Vec<String>,
    pub geohashes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResponse {
    pub items: Vec<PaperSummary>,
    pub total: usize,
    pub query: SearchQuery,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DensityCell {
    pub geohash: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DensityResponse {
    pub precision: usize,
    pub total: usize,
    pub cells: Vec<DensityCell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraverseResponse {
    pub count: usize,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamedRef {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VenueRef {
    pub id: String,
    pub name: String,
    pub kind: ConceptKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationRef {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub geohash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperDetail {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: i64,
    #[serde(rename = "type")]
    pub paper_type: Option<String>,
    pub doi: Option<String>,
    pub disciplines: Vec<String>,
    pub authors: Vec<NamedRef>,
    pub venue: Option<VenueRef>,
    pub locations: Vec<LocationRef>,
    pub knowledge: Vec<NamedRef>,
    /// Papers this one cites.
    pub cites: Vec<String>,
    pub cited_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkStatsResponse {
    pub network: NetworkKind,
    pub rows: Vec<NetworkReportRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HealthResponse {
    pub status: &'static str,
    pub api_version: &'static str,
    pub papers: usize,
    pub located_points: usize,
    pub nodes: usize,
    pub edges: usize,
}

fn name_of(s: &Snapshot, id: &str) -> String {
    s.kg
        .node(id)
        .and_then(|n| n.properties.get("name"))
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_owned()
}

fn discipline_names(indices: &[usize]) -> Vec<String> {
    indices.iter().map(|&i| DISCIPLINES[i].to_owned()).collect()
}

impl Snapshot {
    /// Conjunction of keyword substring (title or abstract, case-insensitive),
    /// discipline and box filters, ordered by year descending then id.
    pub fn search(&self, q: &SearchQuery) -> ApiResult<SearchResponse> {
        q.validate()?;
        let in_box: Option<BTreeSet<String>> = match q.bbox {
            None => None,
            Some([w, s, e, n]) => {
                let boxes = BoundingBox::split_antimeridian(s, n, w, e)
                    .map_err(|err| ApiError::bad_request(format!("bbox: {err}")))?;
                Some(self.geo.bbox_search(&boxes, None).into_iter().collect())
            }
        };
        let kw = q.keyword.to_lowercase();
        let hits: Vec<_> = self
            .papers
            .iter()
            .filter(|p| kw.is_empty() || p.title_lc.contains(&kw) || p.abstract_lc.contains(&kw))
            .filter(|p| q.discipline.is_none_or(|d| p.disciplines.contains(&d)))
            .filter(|p| in_box.as_ref().is_none_or(|set| set.contains(&p.id)))
            .collect();
        let items = hits
            .iter()
            .skip(q.offset)
            .take(q.limit)
            .map(|p| PaperSummary {
                id: p.id.clone(),
                title: p.title.clone(),
                year: p.year,
                disciplines: discipline_names(&p.disciplines),
                geohashes: p.geohashes.clone(),
            })
            .collect();
        Ok(SearchResponse {
            items,
            total: hits.len(),
            query: q.clone(),
        })
    }

    pub fn density(&self, precision: usize) -> ApiResult<DensityResponse> {
        let grid = self
            .geo
            .density_grid(precision)
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(DensityResponse {
            precision,
            total: grid.values().sum(),
            cells: grid.into_iter().map(|(geohash, count)| DensityCell { geohash, count }).collect(),
        })
    }

    pub fn traverse(&self, q: &PathQuery) -> ApiResult<TraverseResponse> {
        if q.steps.is_empty() || q.steps.len() > MAX_HOPS {
            return Err(ApiError::bad_request(format!(
                "path queries take 1 to {MAX_HOPS} steps, got {}",
                q.steps.len()
            )));
        }
        let rows = self.kg.traverse(q).map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(TraverseResponse { count: rows.len(), rows })
    }

    pub fn paper(&self, id: &str) -> ApiResult<PaperDetail> {
        let entry = self
            .by_id
            .get(id)
            .map(|&i| &self.papers[i])
            .ok_or_else(|| ApiError::not_found(format!("no paper with id {id:?}")))?;
        let node = self.kg.node(id).expect("indexed papers are graph nodes");
        let prop = |k: &str| node.properties.get(k).and_then(Value::as_str).map(str::to_owned);

        let mut authors = Vec::new();
        let mut venue = None;
        let mut locations = Vec::new();
        let mut knowledge = Vec::new();
        let mut cited_by = Vec::new();
        for (kind, target) in self.kg.outgoing(id) {
            match kind {
                RelationKind::IsWrittenBy => authors.push(NamedRef {
                    id: target.clone(),
                    name: name_of(self, target),
                }),
                RelationKind::IsPublishedIn => {
                    venue = self.kg.node(target).map(|v| VenueRef {
                        id: target.clone(),
                        name: name_of(self, target),
                        kind: v.kind,
                    })
                }
                RelationKind::MentionLocation => {
                    if let Some(p) = location_point(&self.kg, target) {
                        locations.push(LocationRef {
                            name: name_of(self, target),
                            lat: p.lat,
                            lon: p.lon,
                            geohash: encode(p, DEFAULT_INDEX_PRECISION)
                                .map(|g| g.as_str().to_owned())
                                .unwrap_or_default(),
                        })
                    }
                }
                RelationKind::MentionKnowledge => knowledge.push(NamedRef {
                    id: target.clone(),
                    name: name_of(self, target),
                }),
                RelationKind::IsCitedBy => cited_by.push(target.clone()),
                _ => {}
            }
        }
        let cites = self
            .kg
            .incoming(id)
            .filter(|(k, _)| *k == RelationKind::IsCitedBy)
            .map(|(_, s)| s.clone())
            .collect();
        Ok(PaperDetail {
            id: entry.id.clone(),
            title: entry.title.clone(),
            abstract_text: prop("abstract").unwrap_or_default(),
            year: entry.year,
            paper_type: prop("type"),
            doi: prop("doi"),
            disciplines: discipline_names(&entry.disciplines),
            authors,
            venue,
            locations,
            knowledge,
            cites,
            cited_by,
        })
    }

    pub fn network_stats(&self, kind: &str) -> ApiResult<NetworkStatsResponse> {
        let network: NetworkKind = kind
            .parse()
            .map_err(|_| ApiError::not_found(format!("unknown network kind {kind:?}")))?;
        Ok(NetworkStatsResponse {
            network,
            rows: self.networks.get(&network).cloned().unwrap_or_default(),
        })
    }

    pub fn health(&self) -> HealthResponse {
        HealthResponse {
            status: "ok",
            api_version: API_VERSION,
            papers: self.papers.len(),
            located_points: self.geo.len(),
            nodes: self.kg.node_count(),
            edges: self.kg.edge_count(),
        }
    }
}

/// Parse the `precision` parameter of `GET /geo/density`.
pub fn parse_density_precision(raw: Option<&str>) -> ApiResult<usize> {
    parse_count("precision", raw, DEFAULT_DENSITY_PRECISION)
}

/// Query-string parameters of `GET /geo/density`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct DensityParams {
    pub precision: Option<String>,
}
