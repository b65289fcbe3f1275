use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LineWarning;
use crate::error::{Error, Result};
use crate::extract::GlossaryEntry;
use crate::text::{find_word_ci, fold_whitespace_lower};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTriple {
    pub paper_id: String,
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedTriple {
    pub paper_id: String,
    pub h: String,
    pub t: String,
    pub head_surface: String,
    pub r_surface: String,
    pub tail_surface: String,
    pub sentence: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationLabel {
    #[serde(rename = "is_A")]
    IsA,
    #[serde(rename = "impact")]
    Impact,
    #[serde(rename = "related_to")]
    RelatedTo,
    #[serde(rename = "unknown")]
    Unknown,
}

pub const NUM_RELATION_LABELS: usize = 4;

impl RelationLabel {
    pub const ALL: [RelationLabel; NUM_RELATION_LABELS] =
        [RelationLabel::IsA, RelationLabel::Impact, RelationLabel::RelatedTo, RelationLabel::Unknown];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationLabel::IsA => "is_A",
            RelationLabel::Impact => "impact",
            RelationLabel::RelatedTo => "related_to",
            RelationLabel::Unknown => "unknown",
        }
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown relation label {s:?}")))
    }
}

/// Text of one relation instance: a sentence and the surface forms of its triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInput {
    pub sentence: String,
    pub head: String,
    pub relation: String,
    pub tail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationAnnotation {
    pub input: RelationInput,
    pub label: RelationLabel,
}

impl AlignedTriple {
    pub fn input(&self) -> RelationInput {
        RelationInput {
            sentence: self.sentence.clone(),
            head: self.head_surface.clone(),
            relation: self.r_surface.clone(),
            tail: self.tail_surface.clone(),
        }
    }
}

/// Undo the `\t`, `\n` and `\\` escapes of the sentence field.
pub fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

pub fn escape_field(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

/// Parse `paper_id<TAB>head<TAB>relation<TAB>tail<TAB>sentence` lines.
pub fn parse_triples(raw: &str) -> (Vec<RawTriple>, Vec<LineWarning>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut warn = |m: &str| warnings.push(LineWarning { line: i + 1, message: m.to_owned() });
        let f: Vec<&str> = line.splitn(5, '\t').collect();
        if f.len() != 5 || f[..4].iter().any(|x| x.trim().is_empty()) {
            warn("expected paper_id, head, relation, tail, sentence");
            continue;
        }
        let sentence = unescape_field(f[4]);
        if find_word_ci(&sentence, f[1].trim()).is_none() || find_word_ci(&sentence, f[3].trim()).is_none() {
            warn("sentence does not contain both head and tail");
            continue;
        }
        out.push(RawTriple {
            paper_id: f[0].trim().to_owned(),
            head: f[1].trim().to_owned(),
            relation: f[2].trim().to_owned(),
            tail: f[3].trim().to_owned(),
            sentence,
        });
    }
    (out, warnings)
}

pub fn ingest_triples(path: &Path) -> Result<(Vec<RawTriple>, Vec<LineWarning>)> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    Ok(parse_triples(&raw))
}

/// Parse `head<TAB>relation<TAB>tail<TAB>label<TAB>sentence` lines.
pub fn parse_relation_annotations(raw: &str) -> (Vec<RelationAnnotation>, Vec<LineWarning>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(5, '\t').collect();
        let label = f.get(3).and_then(|l| l.trim().parse::<RelationLabel>().ok());
        match (f.as_slice(), label) {
            ([h, r, t, _, s], Some(label)) if !h.trim().is_empty() && !t.trim().is_empty() => {
                out.push(RelationAnnotation {
                    input: RelationInput {
                        sentence: unescape_field(s),
                        head: h.trim().to_owned(),
                        relation: r.trim().to_owned(),
                        tail: t.trim().to_owned(),
                    },
                    label,
                })
            }
            _ => warnings.push(LineWarning {
                line: i + 1,
                message: "expected head, relation, tail, label, sentence".into(),
            }),
        }
    }
    (out, warnings)
}

pub fn load_relation_annotations(path: &Path) -> Result<(Vec<RelationAnnotation>, Vec<LineWarning>)> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    Ok(parse_relation_annotations(&raw))
}

/// Case-folded, whitespace-normalized entity name to entity id. When two
/// entities share a name the smaller id wins.
pub fn name_map(glossary: &[GlossaryEntry]) -> BTreeMap<String, String> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for e in glossary {
        let key = fold_whitespace_lower(&e.name);
        match map.get(&key) {
            Some(existing) if *existing <= e.entity_id => {
                log::warn!("entity name {:?} shared by {} and {}", e.name, existing, e.entity_id);
            }
            _ => {
                map.insert(key, e.entity_id.clone());
            }
        }
    }
    map
}

/// Exact-match alignment of both triple ends to glossary entities.
pub fn align(triple: &RawTriple, names: &BTreeMap<String, String>) -> Option<AlignedTriple> {
    let h = names.get(&fold_whitespace_lower(&triple.head))?;
    let t = names.get(&fold_whitespace_lower(&triple.tail))?;
    if h == t {
        return None;
    }
    Some(AlignedTriple {
        paper_id: triple.paper_id.clone(),
        h: h.clone(),
        t: t.clone(),
        head_surface: triple.head.clone(),
        r_surface: triple.relation.clone(),
        tail_surface: triple.tail.clone(),
        sentence: triple.sentence.clone(),
    })
}

/// Aligned triples plus the ones that failed, kept for audit.
pub fn align_all(triples: &[RawTriple], names: &BTreeMap<String, String>) -> (Vec<AlignedTriple>, Vec<RawTriple>) {
    let mut aligned = Vec::new();
    let mut unaligned = Vec::new();
    for t in triples {
        match align(t, names) {
            Some(a) => aligned.push(a),
            None => unaligned.push(t.clone()),
        }
    }
    (aligned, unaligned)
}

pub fn triple_line(t: &RawTriple) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}",
        t.paper_id,
        t.head,
        t.relation,
        t.tail,
        escape_field(&t.sentence)
    )
}
