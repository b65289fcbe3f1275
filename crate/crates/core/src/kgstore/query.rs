use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::{ConceptKind, RelationKind};
use super::store::{KgStore, Node};
use crate::error::{Error, Result};

pub const MAX_HOPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Follow edges from source to target.
    Forward,
    /// Follow edges from target to source.
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub relation: RelationKind,
    pub direction: Direction,
}

/// Node filter: all given conditions must hold.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Selector {
    pub kind: Option<ConceptKind>,
    pub id: Option<String>,
    pub properties: BTreeMap<String, Value>,
}

impl Selector {
    pub fn matches(&self, node: &Node) -> bool {
        self.kind.is_none_or(|k| k == node.kind)
            && self.id.as_deref().is_none_or(|id| id == node.id)
            && self.properties.iter().all(|(k, v)| node.properties.get(k) == Some(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathQuery {
    #[serde(default)]
    pub start: Selector,
    pub steps: Vec<Step>,
    #[serde(default)]
    pub end: Selector,
}

impl PathQuery {
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() || self.steps.len() > MAX_HOPS {
            return Err(Error::invalid(format!(
                "path queries take 1 to {MAX_HOPS} steps, got {}",
                self.steps.len()
            )));
        }
        Ok(())
    }
}

impl KgStore {
    /// Every node sequence `[n0, .., nk]` with n0 matching the start selector,
    /// nk matching the end selector and each consecutive pair joined by the
    /// corresponding step. Rows are sorted.
    pub fn traverse(&self, q: &PathQuery) -> Result<Vec<Vec<String>>> {
        q.validate()?;
        let mut rows: Vec<Vec<String>> = self
            .nodes()
            .filter(|n| q.start.matches(n))
            .map(|n| vec![n.id.clone()])
            .collect();
        for step in &q.steps {
            let mut next = Vec::new();
            for row in rows {
                let last = row.last().expect("non-empty row");
                let hop: Box<dyn Iterator<Item = &(RelationKind, String)>> = match step.direction {
                    Direction::Forward => Box::new(self.outgoing(last)),
                    Direction::Backward => Box::new(self.incoming(last)),
                };
                for (k, other) in hop {
                    if *k == step.relation {
                        let mut r = row.clone();
                        r.push(other.clone());
                        next.push(r);
                    }
                }
            }
            rows = next;
        }
        rows.retain(|r| self.node(r.last().expect("non-empty row")).is_some_and(|n| q.end.matches(n)));
        rows.sort();
        Ok(rows)
    }
}
