use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceId {
    Acemap,
    Cord19,
    Digsci,
    Preprint,
}

impl SourceId {
    pub const ALL: [SourceId; 4] = [SourceId::Acemap, SourceId::Cord19, SourceId::Digsci, SourceId::Preprint];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceId::Acemap => "acemap",
            SourceId::Cord19 => "cord19",
            SourceId::Digsci => "digsci",
            SourceId::Preprint => "preprint",
        }
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SourceId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown source {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaperType {
    Article,
    Proceeding,
    Preprint,
}

/// One validated row of a source feed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub source: SourceId,
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doi: Option<String>,
    pub title: String,
    #[serde(default)]
    pub r#abstract: String,
    pub year: i32,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub orgs: Vec<String>,
    #[serde(default)]
    pub venue: String,
    #[serde(rename = "type")]
    pub paper_type: PaperType,
    /// DOIs of cited papers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<String>,
}

impl SourceRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.title.trim().is_empty() {
            return Err("title is empty".into());
        }
        if !(1900..=2100).contains(&self.year) {
            return Err(format!("year {} outside 1900..=2100", self.year));
        }
        if self.id.trim().is_empty() {
            return Err("id is empty".into());
        }
        if self.authors.iter().any(|a| a.trim().is_empty()) {
            return Err("authors list contains an empty name".into());
        }
        if self.doi.as_deref().is_some_and(|d| d.trim().is_empty()) {
            return Err("doi is present but empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: Vec<SourceRecord>,
    pub warnings: Vec<LineWarning>,
}

impl IngestReport {
    /// Line-numbered error report text.
    pub fn error_report(&self) -> String {
        self.warnings
            .iter()
            .map(|w| format!("line {}: {}\n", w.line, w.message))
            .collect()
    }
}

pub fn ingest_source(path: &Path, source: SourceId) -> Result<IngestReport> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    Ok(parse_source(&raw, source))
}

/// Parse JSON-lines source rows. Malformed rows become warnings with their
/// 1-based line number; blank lines are skipped.
pub fn parse_source(raw: &str, source: SourceId) -> IngestReport {
    let mut report = IngestReport::default();
    for (i, line) in raw.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut warn = |message: String| report.warnings.push(LineWarning { line: line_no, message });
        let record: SourceRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                warn(format!("schema violation: {e}"));
                continue;
            }
        };
        if record.source != source {
            warn(format!("record source {} does not match feed {source}", record.source));
            continue;
        }
        if let Err(m) = record.validate() {
            warn(m);
            continue;
        }
        report.records.push(record);
    }
    report
}
