pub mod model;
pub mod triples;

pub use model::{
    evaluate_relations, find_tokens, segment_mask, softmax, train_relation, EncodedInput, RelationConfig,
    RelationModel, RelationReport, MAX_TOKENS,
};
pub use triples::{
    align, align_all, escape_field, ingest_triples, load_relation_annotations, name_map, parse_relation_annotations,
    parse_triples, triple_line, unescape_field, AlignedTriple, RawTriple, RelationAnnotation, RelationInput,
    RelationLabel, NUM_RELATION_LABELS,
};

/// Knowledge-graph edge line `h<TAB>label<TAB>t<TAB>paper_id`; unknown
/// relations produce no edge.
pub fn edge_line(triple: &AlignedTriple, label: RelationLabel) -> Option<String> {
    (label != RelationLabel::Unknown).then(|| format!("{}\t{}\t{}\t{}", triple.h, label, triple.t, triple.paper_id))
}
