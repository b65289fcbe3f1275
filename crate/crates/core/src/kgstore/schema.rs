use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SCHEMA_SOURCE: &str = include_str!("../../../../schema/covidia.schema");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptKind {
    Paper,
    Author,
    Organization,
    Journal,
    Conference,
    Preprint,
    Venue,
    Topic,
    Discipline,
    Papertable,
    Illustration,
    Knowledge,
    Location,
}

impl ConceptKind {
    pub const ALL: [ConceptKind; 13] = [
        ConceptKind::Paper,
        ConceptKind::Author,
        ConceptKind::Organization,
        ConceptKind::Journal,
        ConceptKind::Conference,
        ConceptKind::Preprint,
        ConceptKind::Venue,
        ConceptKind::Topic,
        ConceptKind::Discipline,
        ConceptKind::Papertable,
        ConceptKind::Illustration,
        ConceptKind::Knowledge,
        ConceptKind::Location,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConceptKind::Paper => "paper",
            ConceptKind::Author => "author",
            ConceptKind::Organization => "organization",
            ConceptKind::Journal => "journal",
            ConceptKind::Conference => "conference",
            ConceptKind::Preprint => "preprint",
            ConceptKind::Venue => "venue",
            ConceptKind::Topic => "topic",
            ConceptKind::Discipline => "discipline",
            ConceptKind::Papertable => "papertable",
            ConceptKind::Illustration => "illustration",
            ConceptKind::Knowledge => "knowledge",
            ConceptKind::Location => "location",
        }
    }
}

impl fmt::Display for ConceptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown concept kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    #[serde(rename = "is_cited_by")]
    IsCitedBy,
    #[serde(rename = "is_written_by")]
    IsWrittenBy,
    #[serde(rename = "is_published_in")]
    IsPublishedIn,
    #[serde(rename = "in_the_topic_of")]
    InTheTopicOf,
    #[serde(rename = "belongs_to")]
    BelongsTo,
    #[serde(rename = "mention_knowledge")]
    MentionKnowledge,
    #[serde(rename = "mention_location")]
    MentionLocation,
    #[serde(rename = "work_in")]
    WorkIn,
    #[serde(rename = "is_located_in")]
    IsLocatedIn,
    #[serde(rename = "has_papertable")]
    HasPapertable,
    #[serde(rename = "has_illustration")]
    HasIllustration,
    #[serde(rename = "is_A")]
    IsA,
    #[serde(rename = "impact")]
    Impact,
    #[serde(rename = "related_to")]
    RelatedTo,
    #[serde(rename = "subClassOf")]
    SubClassOf,
    #[serde(rename = "sameAs")]
    SameAs,
}

impl RelationKind {
    pub const ALL: [RelationKind; 16] = [
        RelationKind::IsCitedBy,
        RelationKind::IsWrittenBy,
        RelationKind::IsPublishedIn,
        RelationKind::InTheTopicOf,
        RelationKind::BelongsTo,
        RelationKind::MentionKnowledge,
        RelationKind::MentionLocation,
        RelationKind::WorkIn,
        RelationKind::IsLocatedIn,
        RelationKind::HasPapertable,
        RelationKind::HasIllustration,
        RelationKind::IsA,
        RelationKind::Impact,
        RelationKind::RelatedTo,
        RelationKind::SubClassOf,
        RelationKind::SameAs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::IsCitedBy => "is_cited_by",
            RelationKind::IsWrittenBy => "is_written_by",
            RelationKind::IsPublishedIn => "is_published_in",
            RelationKind::InTheTopicOf => "in_the_topic_of",
            RelationKind::BelongsTo => "belongs_to",
            RelationKind::MentionKnowledge => "mention_knowledge",
            RelationKind::MentionLocation => "mention_location",
            RelationKind::WorkIn => "work_in",
            RelationKind::IsLocatedIn => "is_located_in",
            RelationKind::HasPapertable => "has_papertable",
            RelationKind::HasIllustration => "has_illustration",
            RelationKind::IsA => "is_A",
            RelationKind::Impact => "impact",
            RelationKind::RelatedTo => "related_to",
            RelationKind::SubClassOf => "subClassOf",
            RelationKind::SameAs => "sameAs",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown relation kind {s:?}")))
    }
}

/// Concept kinds plus the allowed (source, relation, target) signatures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub concepts: BTreeSet<ConceptKind>,
    pub signatures: BTreeSet<(ConceptKind, RelationKind, ConceptKind)>,
}

impl Schema {
    /// Parse the declarative schema format: `concept <kind>` and
    /// `relation <name> <source> <target>` lines, `#` comments.
    pub fn parse(raw: &str) -> Result<Self> {
        let mut concepts = BTreeSet::new();
        let mut signatures = BTreeSet::new();
        for (i, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let err = |m: String| Error::Schema(format!("schema line {}: {m}", i + 1));
            match f.as_slice() {
                ["concept", k] => {
                    concepts.insert(k.parse().map_err(|e: Error| err(e.to_string()))?);
                }
                ["relation", r, s, t] => {
                    let s: ConceptKind = s.parse().map_err(|e: Error| err(e.to_string()))?;
                    let t: ConceptKind = t.parse().map_err(|e: Error| err(e.to_string()))?;
                    if !concepts.contains(&s) || !concepts.contains(&t) {
                        return Err(err("relation uses an undeclared concept".into()));
                    }
                    signatures.insert((s, r.parse().map_err(|e: Error| err(e.to_string()))?, t));
                }
                _ => return Err(err(format!("cannot parse {line:?}"))),
            }
        }
        Ok(Schema { concepts, signatures })
    }

    /// The shipped schema.
    pub fn covidia() -> &'static Schema {
        static SCHEMA: OnceLock<Schema> = OnceLock::new();
        SCHEMA.get_or_init(|| Schema::parse(SCHEMA_SOURCE).expect("bundled schema parses"))
    }

    pub fn allows(&self, source: ConceptKind, relation: RelationKind, target: ConceptKind) -> bool {
        self.signatures.contains(&(source, relation, target))
    }
}
