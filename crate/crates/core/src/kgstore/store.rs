use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::{ConceptKind, RelationKind, Schema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: ConceptKind,
    #[serde(default)]
    pub properties: BTreeMap<String, Value>,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: ConceptKind) -> Self {
        Node {
            id: id.into(),
            kind,
            properties: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.properties.insert(key.to_owned(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub kind: RelationKind,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl Edge {
    pub fn new(source: impl Into<String>, kind: RelationKind, target: impl Into<String>) -> Self {
        Edge {
            source: source.into(),
            kind,
            target: target.into(),
            provenance: None,
        }
    }

    pub fn key(&self) -> (&str, RelationKind, &str) {
        (&self.source, self.kind, &self.target)
    }
}

/// Per-kind and total counts. Every kind appears, zeros included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgStats {
    pub nodes: BTreeMap<String, usize>,
    pub edges: BTreeMap<String, usize>,
    pub total_nodes: usize,
    pub total_edges: usize,
}

/// In-memory typed property graph. Nodes are keyed by id; an edge is unique
/// per (source, kind, target).
#[derive(Debug, Clone)]
pub struct KgStore {
    schema: &'static Schema,
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<(String, RelationKind, String), Option<String>>,
    out: BTreeMap<String, BTreeSet<(RelationKind, String)>>,
    inc: BTreeMap<String, BTreeSet<(RelationKind, String)>>,
}

impl Default for KgStore {
    fn default() -> Self {
        Self::new()
    }
}

impl KgStore {
    pub fn new() -> Self {
        Self::with_schema(Schema::covidia())
    }

    pub fn with_schema(schema: &'static Schema) -> Self {
        KgStore {
            schema,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            out: BTreeMap::new(),
            inc: BTreeMap::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        self.schema
    }

    /// Insert a node or merge its properties into the existing one. Returns
    /// whether anything changed. A node id cannot change kind.
    pub fn upsert_node(&mut self, node: Node) -> Result<bool> {
        if node.id.is_empty() {
            return Err(Error::invalid("node id is empty"));
        }
        if !self.schema.concepts.contains(&node.kind) {
            return Err(Error::Schema(format!("concept {} not in schema", node.kind)));
        }
        match self.nodes.get_mut(&node.id) {
            None => {
                self.nodes.insert(node.id.clone(), node);
                Ok(true)
            }
            Some(existing) if existing.kind != node.kind => Err(Error::Schema(format!(
                "node {} is a {}, not a {}",
                node.id, existing.kind, node.kind
            ))),
            Some(existing) => {
                let mut changed = false;
                for (k, v) in node.properties {
                    if existing.properties.get(&k) != Some(&v) {
                        existing.properties.insert(k, v);
                        changed = true;
                    }
                }
                Ok(changed)
            }
        }
    }

    /// Insert an edge between existing nodes whose kinds match a schema
    /// signature. Returns false if the edge was already present.
    pub fn upsert_edge(&mut self, edge: Edge) -> Result<bool> {
        let kind_of = |id: &str| {
            self.nodes
                .get(id)
                .map(|n| n.kind)
                .ok_or_else(|| Error::NotFound(format!("edge endpoint {id}")))
        };
        let (s, t) = (kind_of(&edge.source)?, kind_of(&edge.target)?);
        if !self.schema.allows(s, edge.kind, t) {
            return Err(Error::Schema(format!("{} cannot link {s} to {t}", edge.kind)));
        }
        let key = (edge.source.clone(), edge.kind, edge.target.clone());
        if self.edges.contains_key(&key) {
            return Ok(false);
        }
        self.out.entry(edge.source.clone()).or_default().insert((edge.kind, edge.target.clone()));
        self.inc.entry(edge.target.clone()).or_default().insert((edge.kind, edge.source.clone()));
        self.edges.insert(key, edge.provenance);
        Ok(true)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Edges in (source, kind, target) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|((s, k, t), p)| Edge {
            source: s.clone(),
            kind: *k,
            target: t.clone(),
            provenance: p.clone(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Outgoing (kind, target) pairs of a node, sorted.
    pub fn outgoing(&self, id: &str) -> impl Iterator<Item = &(RelationKind, String)> {
        self.out.get(id).into_iter().flatten()
    }

    /// Incoming (kind, source) pairs of a node, sorted.
    pub fn incoming(&self, id: &str) -> impl Iterator<Item = &(RelationKind, String)> {
        self.inc.get(id).into_iter().flatten()
    }

    pub fn stats(&self) -> KgStats {
        let mut nodes: BTreeMap<String, usize> = ConceptKind::ALL.iter().map(|k| (k.to_string(), 0)).collect();
        for n in self.nodes.values() {
            *nodes.get_mut(n.kind.as_str()).expect("all kinds present") += 1;
        }
        let mut edges: BTreeMap<String, usize> = RelationKind::ALL.iter().map(|k| (k.to_string(), 0)).collect();
        for (_, k, _) in self.edges.keys() {
            *edges.get_mut(k.as_str()).expect("all kinds present") += 1;
        }
        KgStats {
            total_nodes: nodes.values().sum(),
            total_edges: edges.values().sum(),
            nodes,
            edges,
        }
    }

    /// Referential integrity and schema closure of every stored edge.
    pub fn check_integrity(&self) -> Result<()> {
        for (s, k, t) in self.edges.keys() {
            let (Some(sn), Some(tn)) = (self.nodes.get(s), self.nodes.get(t)) else {
                return Err(Error::Schema(format!("dangling edge {s} {k} {t}")));
            };
            if !self.schema.allows(sn.kind, *k, tn.kind) {
                return Err(Error::Schema(format!("edge {s} {k} {t} violates the schema")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsert_is_idempotent() {
        let mut kg = KgStore::new();
        assert!(kg.upsert_node(Node::new("p", ConceptKind::Paper).with("year", 2020)).unwrap());
        assert!(!kg.upsert_node(Node::new("p", ConceptKind::Paper).with("year", 2020)).unwrap());
        kg.upsert_node(Node::new("k", ConceptKind::Knowledge)).unwrap();
        let e = Edge::new("p", RelationKind::MentionKnowledge, "k");
        assert!(kg.upsert_edge(e.clone()).unwrap());
        for _ in 0..5 {
            assert!(!kg.upsert_edge(e.clone()).unwrap());
        }
        assert_eq!(kg.edge_count(), 1);
        assert_eq!(kg.node_count(), 2);
    }

    #[test]
    fn signature_and_endpoint_errors() {
        let mut kg = KgStore::new();
        kg.upsert_node(Node::new("a", ConceptKind::Author)).unwrap();
        kg.upsert_node(Node::new("k", ConceptKind::Knowledge)).unwrap();
        assert!(matches!(
            kg.upsert_edge(Edge::new("a", RelationKind::MentionKnowledge, "k")),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            kg.upsert_edge(Edge::new("a", RelationKind::WorkIn, "nowhere")),
            Err(Error::NotFound(_))
        ));
        assert!(kg.upsert_node(Node::new("a", ConceptKind::Paper)).is_err());
        assert_eq!(kg.edge_count(), 0);
    }

    #[test]
    fn stats_of_empty_and_hand_fixture() {
        let s = KgStore::new().stats();
        assert_eq!((s.total_nodes, s.total_edges), (0, 0));
        assert!(s.nodes.values().all(|&c| c == 0) && s.nodes.len() == 13);
        assert!(s.edges.values().all(|&c| c == 0) && s.edges.len() == 16);

        // 40 papers, 30 authors, 30 knowledge entities; 250 edges:
        // every paper written by 3 authors (120), every paper mentions 3 entities (120),
        // 10 is_A edges between entities
        let mut kg = KgStore::new();
        for i in 0..40 {
            kg.upsert_node(Node::new(format!("p{i}"), ConceptKind::Paper)).unwrap();
        }
        for i in 0..30 {
            kg.upsert_node(Node::new(format!("a{i}"), ConceptKind::Author)).unwrap();
            kg.upsert_node(Node::new(format!("k{i}"), ConceptKind::Knowledge)).unwrap();
        }
        for i in 0..40 {
            for j in 0..3 {
                kg.upsert_edge(Edge::new(format!("p{i}"), RelationKind::IsWrittenBy, format!("a{}", (i + j * 7) % 30)))
                    .unwrap();
                kg.upsert_edge(Edge::new(format!("p{i}"), RelationKind::MentionKnowledge, format!("k{}", (i + j * 11) % 30)))
                    .unwrap();
            }
        }
        for i in 0..10 {
            kg.upsert_edge(Edge::new(format!("k{i}"), RelationKind::IsA, format!("k{}", i + 10))).unwrap();
        }
        let s = kg.stats();
        assert_eq!((s.total_nodes, s.total_edges), (100, 250));
        assert_eq!(s.nodes["paper"], 40);
        assert_eq!(s.edges["is_written_by"], 120);
        assert_eq!(s.edges["mention_knowledge"], 120);
        assert_eq!(s.edges["is_A"], 10);
        kg.check_integrity().unwrap();
    }
}
