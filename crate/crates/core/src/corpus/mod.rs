//! Source-feed ingestion, name normalization, record fusion and gazetteer-based
//! location tagging.

pub mod fuse;
pub mod ingest;
pub mod locations;
pub mod normalize;

pub use fuse::{
    fuse, read_jsonl, write_jsonl, CanonicalAuthor, CanonicalEntity, CanonicalOrg, CanonicalVenue, FusedCorpus,
    FusionConflict, PaperRecord, VenueKind,
};
pub use ingest::{ingest_source, parse_source, IngestReport, LineWarning, PaperType, SourceId, SourceRecord};
pub use locations::{match_places, tag_locations, LocationMention, PlaceMatch};
pub use normalize::{normalize_name, normalize_title};
