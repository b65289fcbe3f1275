use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LineWarning;
use crate::disciplines;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntitySource {
    Glossary,
    DisciplineKg,
    Wiki,
}

impl EntitySource {
    pub fn as_str(self) -> &'static str {
        match self {
            EntitySource::Glossary => "glossary",
            EntitySource::DisciplineKg => "discipline_kg",
            EntitySource::Wiki => "wiki",
        }
    }
}

impl fmt::Display for EntitySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntitySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glossary" => Ok(EntitySource::Glossary),
            "discipline_kg" => Ok(EntitySource::DisciplineKg),
            "wiki" => Ok(EntitySource::Wiki),
            other => Err(Error::invalid(format!("unknown entity source {other:?}"))),
        }
    }
}

/// A knowledge entity; its description is the document it is retrieved by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlossaryEntry {
    pub entity_id: String,
    pub name: String,
    pub description: String,
    pub discipline: usize,
    pub source: EntitySource,
}

/// Parse `entity_id<TAB>name<TAB>discipline<TAB>source<TAB>description` lines.
/// The discipline may be an index or a label name.
pub fn parse_glossary(raw: &str) -> (Vec<GlossaryEntry>, Vec<LineWarning>) {
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut warn = |m: String| warnings.push(LineWarning { line: i + 1, message: m });
        let f: Vec<&str> = line.splitn(5, '\t').collect();
        if f.len() != 5 {
            warn("expected entity_id, name, discipline, source, description".into());
            continue;
        }
        let Some(discipline) = disciplines::lookup(f[2]) else {
            warn(format!("unknown discipline {:?}", f[2]));
            continue;
        };
        let source = match f[3].trim().parse::<EntitySource>() {
            Ok(s) => s,
            Err(e) => {
                warn(e.to_string());
                continue;
            }
        };
        if f[0].trim().is_empty() || f[1].trim().is_empty() || f[4].trim().is_empty() {
            warn("empty id, name or description".into());
            continue;
        }
        entries.push(GlossaryEntry {
            entity_id: f[0].trim().to_owned(),
            name: f[1].trim().to_owned(),
            description: f[4].trim().to_owned(),
            discipline,
            source,
        });
    }
    (entries, warnings)
}

pub fn load_glossary(path: &Path) -> Result<(Vec<GlossaryEntry>, Vec<LineWarning>)> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    Ok(parse_glossary(&raw))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankAnnotation {
    pub paper_id: String,
    pub entity_id: String,
    pub label: u8,
}

/// Parse `paper_id<TAB>entity_id<TAB>label` lines, label 0 or 1.
pub fn parse_annotations(raw: &str) -> (Vec<RankAnnotation>, Vec<LineWarning>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        match (f.as_slice(), f.get(2).map(|s| s.trim())) {
            ([p, e, _], Some(l @ ("0" | "1"))) if !p.is_empty() && !e.is_empty() => out.push(RankAnnotation {
                paper_id: p.to_string(),
                entity_id: e.to_string(),
                label: l.parse().expect("0 or 1"),
            }),
            _ => warnings.push(LineWarning {
                line: i + 1,
                message: "expected paper_id, entity_id, binary label".into(),
            }),
        }
    }
    (out, warnings)
}

pub fn load_annotations(path: &Path) -> Result<(Vec<RankAnnotation>, Vec<LineWarning>)> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    Ok(parse_annotations(&raw))
}

/// Later annotations of the same (paper, entity) override earlier ones, so a
/// second annotation round refines the first.
pub fn merge_annotations(rounds: &[Vec<RankAnnotation>]) -> Vec<RankAnnotation> {
    let mut merged: BTreeMap<(String, String), u8> = BTreeMap::new();
    for a in rounds.iter().flatten() {
        merged.insert((a.paper_id.clone(), a.entity_id.clone()), a.label);
    }
    merged
        .into_iter()
        .map(|((paper_id, entity_id), label)| RankAnnotation {
            paper_id,
            entity_id,
            label,
        })
        .collect()
}
