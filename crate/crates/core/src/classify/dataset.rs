use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::model::TrainingExample;
use crate::corpus::LineWarning;
use crate::disciplines::NUM_DISCIPLINES;
use crate::error::{Error, Result};

/// Parse a training set: `paper_id<TAB>labels<TAB>title<TAB>abstract`, labels
/// a comma-separated list of indices in 0..22.
pub fn parse_training_set(raw: &str) -> (Vec<TrainingExample>, Vec<LineWarning>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut warn = |m: String| warnings.push(LineWarning { line: i + 1, message: m });
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            warn("expected paper_id, labels, title, abstract".into());
            continue;
        }
        let labels: std::result::Result<BTreeSet<usize>, _> =
            fields[1].split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse::<usize>()).collect();
        let labels = match labels {
            Ok(l) if l.is_empty() => {
                warn("no labels".into());
                continue;
            }
            Ok(l) if l.iter().any(|&x| x >= NUM_DISCIPLINES) => {
                warn("label index out of range".into());
                continue;
            }
            Ok(l) => l,
            Err(e) => {
                warn(format!("bad label list: {e}"));
                continue;
            }
        };
        out.push(TrainingExample {
            paper_id: fields[0].to_owned(),
            text: format!("{} {}", fields[2], fields[3]),
            labels,
        });
    }
    (out, warnings)
}

pub fn load_training_set(path: &Path) -> Result<(Vec<TrainingExample>, Vec<LineWarning>)> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    Ok(parse_training_set(&raw))
}
