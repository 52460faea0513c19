//! The structured text encoding used for events, summaries, reports, the
//! outbox and log payloads.
//!
//! Encoding is compact JSON (RFC 8259) in UTF-8, with no insignificant
//! whitespace. Object members appear in declaration order of the Rust type;
//! maps and sets are emitted in ascending key order. Optional members that
//! are absent are omitted. Lists of records are written one record per line,
//! each line terminated by `\n`.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{RegistryError, Result};

pub fn to_line<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("registry types always serialize")
}

pub fn to_lines<'a, T: Serialize + 'a>(values: impl IntoIterator<Item = &'a T>) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&to_line(v));
        out.push('\n');
    }
    out
}

pub fn from_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| RegistryError::ParseFailed(e.to_string()))
}

pub fn from_lines<T: DeserializeOwned>(s: &str) -> Result<Vec<T>> {
    s.lines().filter(|l| !l.trim().is_empty()).map(from_str).collect()
}
