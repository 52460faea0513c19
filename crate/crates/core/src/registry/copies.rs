use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Registry;
use crate::copies::{next_copy, SequencedCopy, COPY_ID_PREFIX};
use crate::directory::{DirectoryState, JournalEntry};
use crate::engine::SchemeDiff;
use crate::error::{RegistryError, Result};
use crate::kos;
use crate::model::{SchemeState, Uri};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum IngestOutcome {
    Stored { id: String, seq: u64, diff: SchemeDiff },
    NoChange { id: String, seq: u64 },
}

/// One peer scheme as fetched by a harvest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarvestedScheme {
    pub source_token: String,
    pub source_version: u64,
    pub state: SchemeState,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestReport {
    pub peer: String,
    pub schemes: usize,
    /// Copy ids that received a new sequence number.
    pub updated: Vec<String>,
}

fn normalize_source(source: &str) -> String {
    source.trim_end_matches('/').to_string()
}

fn fresh_copy_id(state: &DirectoryState, pending: usize) -> String {
    format!("{COPY_ID_PREFIX}{}", state.copies.len() + pending + 1)
}

impl Registry {
    /// Stores a snapshot of a vocabulary managed elsewhere as the next
    /// sequenced copy, unless nothing changed since the last one.
    pub fn ingest_snapshot(&self, source: &str, scheme_uri: Option<&Uri>, payload: &[u8]) -> Result<IngestOutcome> {
        let (triples, problems) = kos::parse_ntriples(payload);
        if let Some(p) = problems.first() {
            return Err(RegistryError::ParseFailed(format!("line {}: {}", p.line, p.message)));
        }
        let (draft, _) = kos::triples_to_scheme(&triples, &self.vocab)?;
        if let Some(u) = scheme_uri {
            if *u != draft.state.uri {
                return Err(RegistryError::ParseFailed(format!("payload describes {}, not {u}", draft.state.uri)));
            }
        }
        let source = normalize_source(source);
        let now = self.now();
        let copy = {
            let mut dir = self.dir.lock().unwrap();
            let st = dir.state();
            let id = st.copy_id_for(&source, &draft.state.uri).map(str::to_string).unwrap_or_else(|| fresh_copy_id(st, 0));
            let previous = st.latest_copy(&id);
            match next_copy(&id, &source, previous, draft.state, now) {
                None => return Ok(IngestOutcome::NoChange { seq: previous.map_or(0, |p| p.seq), id }),
                Some(c) => {
                    dir.record(vec![JournalEntry::CopyStored { copy: c.clone() }])?;
                    c
                }
            }
        };
        self.emit_copy(&copy);
        Ok(IngestOutcome::Stored { id: copy.id, seq: copy.seq, diff: copy.diff_from_previous })
    }

    /// Latest copies taken from `source`, keyed by the peer's scheme token.
    pub fn harvest_baseline(&self, source: &str) -> BTreeMap<String, SequencedCopy> {
        let source = normalize_source(source);
        let dir = self.dir.lock().unwrap();
        dir.state()
            .copies
            .values()
            .filter_map(|seq| seq.last())
            .filter(|c| c.source == source)
            .filter_map(|c| Some((c.source_token.clone()?, c.clone())))
            .collect()
    }

    /// Stores every changed scheme of one harvest in a single journal write.
    pub fn apply_harvest(&self, source: &str, schemes: Vec<HarvestedScheme>) -> Result<HarvestReport> {
        let source = normalize_source(source);
        let now = self.now();
        let mut report = HarvestReport { peer: source.clone(), schemes: schemes.len(), updated: Vec::new() };
        let stored: Vec<SequencedCopy> = {
            let mut dir = self.dir.lock().unwrap();
            let mut out = Vec::new();
            for h in schemes {
                let st = dir.state();
                let id = st.copy_id_for(&source, &h.state.uri).map(str::to_string).unwrap_or_else(|| fresh_copy_id(st, out.len()));
                if let Some(mut c) = next_copy(&id, &source, st.latest_copy(&id), h.state, now) {
                    c.source_version = Some(h.source_version);
                    c.source_token = Some(h.source_token);
                    out.push(c);
                }
            }
            dir.record(out.iter().cloned().map(|copy| JournalEntry::CopyStored { copy }).collect())?;
            out
        };
        for c in &stored {
            report.updated.push(c.id.clone());
            self.emit_copy(c);
        }
        Ok(report)
    }

    /// A stored copy at `seq`, or the latest one.
    pub fn copy_at(&self, id: &str, seq: Option<u64>) -> Result<SequencedCopy> {
        let dir = self.dir.lock().unwrap();
        let copies = dir.state().copies.get(id).ok_or_else(|| RegistryError::UnknownScheme(id.to_string()))?;
        match seq {
            None => copies.last().cloned().ok_or_else(|| RegistryError::UnknownScheme(id.to_string())),
            Some(s) => copies.iter().find(|c| c.seq == s).cloned().ok_or(RegistryError::UnknownVersion(s)),
        }
    }

    pub fn copies(&self, id: &str) -> Result<Vec<SequencedCopy>> {
        self.dir.lock().unwrap().state().copies.get(id).cloned().ok_or_else(|| RegistryError::UnknownScheme(id.to_string()))
    }
}
