use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use super::schema::{ConceptKind, RelationKind};
use super::store::{Edge, KgStore, Node};
use crate::error::{Error, Result};

pub const NAMESPACE: &str = "http://covidia.example.org/";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";

const ID_ESCAPE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

pub fn node_iri(kind: ConceptKind, id: &str) -> String {
    format!("{NAMESPACE}{kind}/{}", utf8_percent_encode(id, ID_ESCAPE))
}

pub fn class_iri(kind: ConceptKind) -> String {
    format!("{NAMESPACE}class/{kind}")
}

pub fn predicate_iri(kind: RelationKind) -> String {
    match kind {
        RelationKind::SubClassOf => RDFS_SUBCLASS_OF.to_owned(),
        RelationKind::SameAs => OWL_SAME_AS.to_owned(),
        other => format!("{NAMESPACE}relation/{other}"),
    }
}

fn parse_node_iri(iri: &str) -> Result<(ConceptKind, String)> {
    let rest = iri
        .strip_prefix(NAMESPACE)
        .ok_or_else(|| Error::invalid(format!("IRI outside the namespace: {iri}")))?;
    let (kind, id) = rest
        .split_once('/')
        .ok_or_else(|| Error::invalid(format!("IRI without a kind: {iri}")))?;
    let id = percent_decode_str(id)
        .decode_utf8()
        .map_err(|e| Error::invalid(format!("bad percent-encoding in {iri}: {e}")))?;
    Ok((kind.parse()?, id.into_owned()))
}

fn parse_predicate(iri: &str) -> Result<RelationKind> {
    match iri {
        RDFS_SUBCLASS_OF => Ok(RelationKind::SubClassOf),
        OWL_SAME_AS => Ok(RelationKind::SameAs),
        _ => iri
            .strip_prefix(NAMESPACE)
            .and_then(|r| r.strip_prefix("relation/"))
            .ok_or_else(|| Error::invalid(format!("unknown predicate {iri}")))?
            .parse(),
    }
}

/// One `rdf:type` line per node (sorted by id) followed by one line per edge
/// (sorted by source, kind, target).
pub fn to_ntriples(kg: &KgStore) -> String {
    let mut out = String::new();
    for n in kg.nodes() {
        out.push_str(&format!("<{}> <{RDF_TYPE}> <{}> .\n", node_iri(n.kind, &n.id), class_iri(n.kind)));
    }
    for e in kg.edges() {
        let kind_of = |id: &str| kg.node(id).expect("integrity").kind;
        out.push_str(&format!(
            "<{}> <{}> <{}> .\n",
            node_iri(kind_of(&e.source), &e.source),
            predicate_iri(e.kind),
            node_iri(kind_of(&e.target), &e.target)
        ));
    }
    out
}

pub fn export_ntriples(kg: &KgStore, path: &Path) -> Result<()> {
    if kg.is_empty() {
        return Err(Error::Empty("knowledge graph"));
    }
    let file = fs::File::create(path).map_err(|e| Error::write(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(to_ntriples(kg).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::write(path, e))
}

fn split_terms(line: &str) -> Option<[&str; 3]> {
    let body = line.strip_suffix('.')?.trim_end();
    let mut terms = Vec::with_capacity(3);
    let mut rest = body;
    while !rest.is_empty() {
        let inner = rest.strip_prefix('<')?;
        let end = inner.find('>')?;
        terms.push(&inner[..end]);
        rest = inner[end + 1..].trim_start();
    }
    terms.try_into().ok()
}

/// Rebuild a store from exported N-Triples.
pub fn parse_ntriples(raw: &str) -> Result<KgStore> {
    let mut nodes: BTreeMap<String, ConceptKind> = BTreeMap::new();
    let mut edges = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| Error::Format {
            what: "n-triples",
            message: format!("line {}: {m}", i + 1),
        };
        let [s, p, o] = split_terms(line).ok_or_else(|| err("expected three IRIs and a final '.'".into()))?;
        let (sk, sid) = parse_node_iri(s).map_err(|e| err(e.to_string()))?;
        if p == RDF_TYPE {
            if o != class_iri(sk) {
                return Err(err(format!("type {o} does not match {s}")));
            }
            nodes.insert(sid, sk);
            continue;
        }
        let kind = parse_predicate(p).map_err(|e| err(e.to_string()))?;
        let (ok, oid) = parse_node_iri(o).map_err(|e| err(e.to_string()))?;
        nodes.insert(sid.clone(), sk);
        nodes.insert(oid.clone(), ok);
        edges.push(Edge::new(sid, kind, oid));
    }
    let mut kg = KgStore::new();
    for (id, kind) in nodes {
        kg.upsert_node(Node::new(id, kind))?;
    }
    for e in edges {
        kg.upsert_edge(e)?;
    }
    kg.check_integrity()?;
    Ok(kg)
}

pub fn import_ntriples(path: &Path) -> Result<KgStore> {
    let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    parse_ntriples(&raw)
}
