use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::store::{Edge, KgStore, Node};
use crate::error::{Error, Result};

/// One entry of the append-only store log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum LogOp {
    Node(Node),
    Edge(Edge),
}

/// Append operations to a JSON-lines log, creating it if needed.
pub fn append_log(path: &Path, ops: &[LogOp]) -> Result<()> {
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::write(path, e))?;
    let mut w = BufWriter::new(file);
    for op in ops {
        let line = serde_json::to_string(op).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::write(path, e))?;
    }
    w.flush().map_err(|e| Error::write(path, e))
}

/// The whole store as log operations: nodes first, then edges.
pub fn snapshot_ops(kg: &KgStore) -> Vec<LogOp> {
    kg.nodes()
        .cloned()
        .map(LogOp::Node)
        .chain(kg.edges().map(LogOp::Edge))
        .collect()
}

/// Replace `path` with a compacted log of the current store.
pub fn write_log(kg: &KgStore, path: &Path) -> Result<()> {
    if path.exists() {
        fs::remove_file(path).map_err(|e| Error::write(path, e))?;
    }
    append_log(path, &snapshot_ops(kg))
}

/// Replay a log into a fresh store and check its integrity.
pub fn replay_log(path: &Path) -> Result<KgStore> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    let mut kg = KgStore::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let op: LogOp = serde_json::from_str(line).map_err(|e| Error::Format {
            what: "store log",
            message: format!("line {}: {e}", i + 1),
        })?;
        match op {
            LogOp::Node(n) => kg.upsert_node(n)?,
            LogOp::Edge(e) => kg.upsert_edge(e)?,
        };
    }
    kg.check_integrity()?;
    Ok(kg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgstore::schema::{ConceptKind, RelationKind};

    #[test]
    fn log_replay_and_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kg.log");
        let kg = crate::kgstore::query::tests::random_graph(9, 50);
        write_log(&kg, &path).unwrap();
        let back = replay_log(&path).unwrap();
        assert_eq!(back.stats(), kg.stats());
        assert_eq!(back.edges().collect::<Vec<_>>(), kg.edges().collect::<Vec<_>>());

        append_log(
            &path,
            &[
                LogOp::Node(Node::new("extra", ConceptKind::Knowledge).with("name", "x")),
                LogOp::Edge(Edge::new("extra", RelationKind::SameAs, "extra")),
            ],
        )
        .unwrap();
        let grown = replay_log(&path).unwrap();
        assert_eq!(grown.node_count(), kg.node_count() + 1);
        assert_eq!(grown.edge_count(), kg.edge_count() + 1);
    }

    #[test]
    fn dangling_edge_in_log_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kg.log");
        append_log(&path, &[LogOp::Edge(Edge::new("a", RelationKind::IsA, "b"))]).unwrap();
        assert!(replay_log(&path).is_err());
    }
}
