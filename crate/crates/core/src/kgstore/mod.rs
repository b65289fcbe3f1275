//! Typed property graph over the Covidia schema with bounded path queries,
//! N-Triples interchange and a JSON-lines operation log.

pub mod assemble;
pub mod log;
pub mod ntriples;
pub mod query;
pub mod schema;
pub mod store;

pub use assemble::{
    assemble, discipline_node_id, load_links, location_node_id, parse_links, parse_relation_edges, AssembleReport,
    EntityLink, KgInputs, KnowledgeRelation,
};
pub use log::{append_log, replay_log, snapshot_ops, write_log, LogOp};
pub use ntriples::{export_ntriples, import_ntriples, parse_ntriples, to_ntriples, OWL_SAME_AS};
pub use query::{Direction, PathQuery, Selector, Step, MAX_HOPS};
pub use schema::{ConceptKind, RelationKind, Schema};
pub use store::{Edge, KgStats, KgStore, Node};
