//! A registry for controlled vocabularies: concept schemes with stable URIs,
//! an append-only change history, semantic-change classification, import and
//! export, change feeds and inter-registry harvesting.

pub mod cli;
pub mod copies;
pub mod directory;
pub mod engine;
pub mod error;
mod frame;
pub mod kos;
pub mod mint;
pub mod model;
pub mod notify;
pub mod rdf;
pub mod registry;
pub mod service;
pub mod store;
pub mod validation;
pub mod wire;

pub use error::{RegistryError, Result};
