//! Building blocks for an interdisciplinary scholarly knowledge graph: metadata
//! fusion, discipline classification, knowledge-entity tagging, relation
//! classification, a typed graph store, geohash indexing and network analytics.

pub mod classify;
pub mod corpus;
pub mod disciplines;
pub mod error;
pub mod extract;
pub mod geo;
pub mod kgstore;
pub mod netsci;
pub mod relate;
pub mod service;
pub mod text;

pub use error::{Error, Result};
