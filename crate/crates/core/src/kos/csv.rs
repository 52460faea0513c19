//! Flat term-list carrier: `uri,prefLabel,definition,broader,status`.
//!
//! Only the English label and definition, the broader links and the status
//! survive a round trip. Everything else is listed in the [`LossReport`].

use std::collections::BTreeMap;

use crate::error::{RegistryError, Result};
use crate::model::{Concept, SchemeState, StatusTerm, Uri};
use crate::validation::{Rule, Severity, Violation};

use super::{LossEntry, LossReport};

pub const HEADER: [&str; 5] = ["uri", "prefLabel", "definition", "broader", "status"];
const LANG: &str = "en";

/// One data row. `uri` is absent when the registry is expected to mint one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvRow {
    /// 1-based line of the record in the input.
    pub line: usize,
    pub uri: Option<Uri>,
    pub pref_label: Option<String>,
    pub definition: Option<String>,
    pub broader: Vec<Uri>,
    pub status: StatusTerm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvDraft {
    pub rows: Vec<CsvRow>,
    /// Unknown status values (R6), keyed to the row URI when it has one.
    pub issues: Vec<Violation>,
}

impl CsvRow {
    /// The concept this row describes, once a URI is known.
    pub fn to_concept(&self, uri: Uri) -> Concept {
        let mut c = Concept::blank(uri);
        if let Some(l) = &self.pref_label {
            c.pref_labels.insert(LANG.into(), l.clone());
        }
        if let Some(d) = &self.definition {
            c.definition.insert(LANG.into(), d.clone());
        }
        c.broader.extend(self.broader.iter().cloned());
        c.status = self.status;
        c
    }
}

fn non_empty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

pub fn parse_csv(text: &[u8]) -> Result<CsvDraft> {
    let mut reader = ::csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text);
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        _ => return Err(RegistryError::BadHeader),
    };
    let header: Vec<&str> = header.iter().collect();
    let header_ok = header.len() == HEADER.len()
        && header.iter().zip(HEADER).enumerate().all(|(i, (h, want))| {
            let h = if i == 0 { h.trim_start_matches('\u{feff}') } else { h };
            h == want
        });
    if !header_ok {
        return Err(RegistryError::BadHeader);
    }

    let mut rows = Vec::new();
    let mut issues = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            RegistryError::BadRow(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != HEADER.len() {
            return Err(RegistryError::BadRow(line, format!("expected {} fields, found {}", HEADER.len(), rec.len())));
        }
        let bad = |what: &str, e: RegistryError| RegistryError::BadRow(line, format!("{what}: {e}"));
        let uri = match rec[0].trim() {
            "" => None,
            s => Some(Uri::parse(s).map_err(|e| bad("uri", e))?),
        };
        let broader = rec[3]
            .split('|')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Uri::parse(s).map_err(|e| bad("broader", e)))
            .collect::<Result<Vec<_>>>()?;
        let raw_status = rec[4].trim();
        let status = if raw_status.is_empty() {
            StatusTerm::Proposed
        } else {
            raw_status.parse::<StatusTerm>().unwrap_or_else(|_| {
                issues.push(Violation::new(
                    Rule::R6,
                    uri.clone(),
                    Severity::Error,
                    format!("line {line}: status `{raw_status}` is not in the registered status vocabulary"),
                ));
                StatusTerm::Proposed
            })
        };
        rows.push(CsvRow {
            line,
            uri,
            pref_label: non_empty(&rec[1]),
            definition: non_empty(&rec[2]),
            broader,
            status,
        });
    }
    Ok(CsvDraft { rows, issues })
}

/// Trailing path segment equals the numeric id, so the id is recoverable.
fn numeric_id_in_uri(uri: &Uri, n: u64) -> bool {
    uri.path_segments().last() == Some(n.to_string().as_str())
}

/// Every concept field the CSV cannot carry, one entry per field path.
pub fn csv_losses(state: &SchemeState) -> LossReport {
    let mut entries = Vec::new();
    if !state.extras.is_empty() {
        entries.push(LossEntry::new(&state.uri, "extra", "scheme-level statements have no CSV column"));
    }
    for c in state.concepts.values() {
        let mut push = |field: String, reason: &str| entries.push(LossEntry::new(&c.uri, field, reason));
        for lang in c.pref_labels.keys().filter(|l| *l != LANG) {
            push(format!("pref_label({lang})"), "only English labels have a CSV column");
        }
        for lang in c.alt_labels.keys() {
            push(format!("alt_label({lang})"), "alternative labels have no CSV column");
        }
        for lang in c.definition.keys().filter(|l| *l != LANG) {
            push(format!("definition({lang})"), "only English definitions have a CSV column");
        }
        for lang in c.scope_note.keys() {
            push(format!("scope_note({lang})"), "scope notes have no CSV column");
        }
        let sets = [
            ("related", c.related.is_empty(), "related links have no CSV column"),
            ("note", c.notes.is_empty(), "notes have no CSV column"),
            ("extra", c.extras.is_empty(), "unrecognized statements have no CSV column"),
            ("replaces", c.replaces.is_empty(), "succession links have no CSV column"),
            ("replaced_by", c.replaced_by.is_empty(), "succession links have no CSV column"),
        ];
        for (field, empty, reason) in sets {
            if !empty {
                push(field.to_string(), reason);
            }
        }
        if let Some(n) = c.numeric_id {
            if !numeric_id_in_uri(&c.uri, n) {
                push("numeric_id".into(), "numeric identifier is not encoded in the URI");
            }
        }
    }
    LossReport { entries }
}

pub fn serialize_csv(state: &SchemeState) -> (String, LossReport) {
    let mut w = ::csv::WriterBuilder::new().terminator(::csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(HEADER).expect("writing to memory");
    for c in state.concepts.values() {
        let broader: Vec<&str> = c.broader.iter().map(Uri::as_str).collect();
        w.write_record([
            c.uri.as_str(),
            c.pref_labels.get(LANG).map(String::as_str).unwrap_or(""),
            c.definition.get(LANG).map(String::as_str).unwrap_or(""),
            &broader.join("|"),
            c.status.as_str(),
        ])
        .expect("writing to memory");
    }
    let bytes = w.into_inner().expect("writing to memory");
    (String::from_utf8(bytes).expect("input was UTF-8"), csv_losses(state))
}

/// Numeric ids recoverable from row URIs of the form `{prefix}/{n}`.
pub fn numeric_ids(rows: &[CsvRow], prefix: &str) -> BTreeMap<Uri, u64> {
    let prefix = format!("{}/", prefix.trim_end_matches('/'));
    rows.iter()
        .filter_map(|r| {
            let u = r.uri.as_ref()?;
            let n: u64 = u.as_str().strip_prefix(&prefix)?.parse().ok()?;
            (n.to_string() == u.as_str()[prefix.len()..]).then(|| (u.clone(), n))
        })
        .collect()
}
