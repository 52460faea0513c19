//! Minimal RDF term model shared by the concept store and the triple carrier.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::Uri;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";
pub const DC: &str = "http://purl.org/dc/elements/1.1/";
/// Default namespace for registry-specific predicates (`status`, `replaces`, ...).
pub const REG_DEFAULT: &str = "http://purl.example/nsdl-registry#";

pub fn skos(local: &str) -> String {
    format!("{SKOS}{local}")
}

pub fn dc(local: &str) -> String {
    format!("{DC}{local}")
}

/// The object position of a triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Object {
    Iri { value: Uri },
    Literal { value: String, lang: Option<String> },
}

impl Object {
    pub fn iri(u: Uri) -> Self {
        Object::Iri { value: u }
    }

    pub fn literal(value: impl Into<String>, lang: Option<&str>) -> Self {
        Object::Literal {
            value: value.into(),
            lang: lang.filter(|l| !l.is_empty()).map(str::to_string),
        }
    }

    pub fn as_iri(&self) -> Option<&Uri> {
        match self {
            Object::Iri { value } => Some(value),
            Object::Literal { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Uri,
    pub predicate: Uri,
    pub object: Object,
}

impl Triple {
    pub fn new(subject: Uri, predicate: Uri, object: Object) -> Self {
        Triple { subject, predicate, object }
    }
}

/// Renders the N-Triples line for this triple, without a trailing newline.
impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> ", self.subject, self.predicate)?;
        match &self.object {
            Object::Iri { value } => write!(f, "<{value}>")?,
            Object::Literal { value, lang } => {
                f.write_str("\"")?;
                for ch in value.chars() {
                    match ch {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(lang) = lang {
                    write!(f, "@{lang}")?;
                }
            }
        }
        f.write_str(" .")
    }
}
