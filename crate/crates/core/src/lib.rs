//! Core of the ИКОН ontology workbench: component manifests and the
//! integrity check, the segmented library store, corpus formation,
//! indexing, linguistic analysis and ontology construction.

pub mod corpus;
pub mod digest;
pub mod index;
pub mod library;
pub mod linganalysis;
pub mod manifest;
pub mod ontology;
