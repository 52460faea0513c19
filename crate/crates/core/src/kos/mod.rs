//! Vocabulary import and export carriers.

pub mod csv;
pub mod ntriples;
pub mod skos;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{RegistryError, Result};
use crate::model::{SchemeState, Uri};
use crate::wire;

pub use self::csv::{parse_csv, serialize_csv, CsvDraft, CsvRow};
pub use self::ntriples::{parse_ntriples, parse_triple_line, serialize_ntriples, ParseIssue};
pub use self::skos::{scheme_to_triples, triples_to_scheme, SchemeDraft, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Triples,
    Csv,
    /// Canonical JSON of the full scheme state.
    Structured,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Triples => "triples",
            Format::Csv => "csv",
            Format::Structured => "structured",
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            Format::Triples => "application/n-triples; charset=utf-8",
            Format::Csv => "text/csv; charset=utf-8",
            Format::Structured => "application/json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Format {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triples" | "nt" | "ntriples" => Ok(Format::Triples),
            "csv" => Ok(Format::Csv),
            "structured" | "json" => Ok(Format::Structured),
            other => Err(RegistryError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LossEntry {
    pub concept: Uri,
    pub field_path: String,
    pub reason: String,
}

impl LossEntry {
    pub fn new(concept: &Uri, field_path: impl Into<String>, reason: impl Into<String>) -> Self {
        LossEntry { concept: concept.clone(), field_path: field_path.into(), reason: reason.into() }
    }
}

impl fmt::Display for LossEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LOSS {} {} {}", self.concept, self.field_path, self.reason)
    }
}

/// Fields an export could not carry. Empty for lossless formats.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossReport {
    pub entries: Vec<LossEntry>,
}

impl LossReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Serializes a snapshot in the requested format.
pub fn export_state(state: &SchemeState, format: Format, vocab: &Vocabulary) -> (String, LossReport) {
    match format {
        Format::Triples => (scheme_to_triples(state, vocab), LossReport::default()),
        Format::Csv => serialize_csv(state),
        Format::Structured => (wire::to_line(state), LossReport::default()),
    }
}
