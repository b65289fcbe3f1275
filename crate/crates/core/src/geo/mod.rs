//! Geohash cells, the gazetteer-backed geocoder, and the POI index used for
//! bounding-box search and density maps.

pub mod gazetteer;
pub mod geohash;
pub mod index;

pub use gazetteer::{GeoCoder, Gazetteer};
pub use geohash::{decode, encode, BoundingBox, GeoPoint, Geohash};
pub use index::{density_to_tsv, GeoIndex, IndexedPoint, DEFAULT_INDEX_PRECISION};
