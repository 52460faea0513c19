use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Minter, Registry, STATUS_TOKEN};
use crate::copies::COPY_ID_PREFIX;
use crate::engine::{diff_concepts, diff_states, ChangeEvent, EventKind, PendingEvent, SchemeChange, SchemeCreation, SchemeDiff};
use crate::error::{RegistryError, Result};
use crate::kos::{self, csv::numeric_ids, export_state, Format, LossReport};
use crate::mint;
use crate::model::{AgentId, Concept, LangText, SchemeMeta, SchemeState, StatusTerm, Uri, UriStrategy};
use crate::validation::{self, Violation};
use crate::wire;

/// Inputs for creating a scheme from a vocabulary file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportRequest {
    pub token: String,
    pub owner: AgentId,
    pub format: Format,
    /// Overrides the title carried by the payload, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Defaults to registry-assigned URIs under the registry base.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<UriStrategy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Hosted,
    Copy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSummary {
    /// Scheme token, or copy id for sequenced copies.
    pub token: String,
    pub kind: SchemeKind,
    pub uri: Uri,
    pub title: String,
    /// Head version of a hosted scheme, sequence number of a copy.
    pub version: u64,
    pub concepts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Since {
    Version(u64),
    Time(DateTime<Utc>),
}

/// A parsed import payload before URIs are settled.
struct Parsed {
    state: SchemeState,
    issues: Vec<Violation>,
    /// Rows waiting for a minted URI, as (label, concept template).
    unminted: Vec<Concept>,
}

fn placeholder(i: usize) -> Uri {
    Uri::parse(&format!("http://pending.invalid/row/{i}")).expect("valid")
}

fn parse_payload(payload: &[u8], format: Format, vocab: &kos::Vocabulary, scheme_uri: &Uri) -> Result<Parsed> {
    match format {
        Format::Triples => {
            let (triples, problems) = kos::parse_ntriples(payload);
            if let Some(p) = problems.first() {
                return Err(RegistryError::ParseFailed(format!("line {}: {}", p.line, p.message)));
            }
            let (draft, warnings) = kos::triples_to_scheme(&triples, vocab)?;
            for w in warnings {
                tracing::warn!("{w}");
            }
            Ok(Parsed { state: draft.state, issues: draft.issues, unminted: Vec::new() })
        }
        Format::Csv => {
            let draft = kos::parse_csv(payload)?;
            let mut state = SchemeState::new(scheme_uri.clone(), "", "");
            let mut unminted = Vec::new();
            for row in &draft.rows {
                match &row.uri {
                    Some(u) => {
                        if state.concepts.contains_key(u) {
                            return Err(RegistryError::DuplicateUri(u.clone()));
                        }
                        state.concepts.insert(u.clone(), row.to_concept(u.clone()));
                    }
                    None => unminted.push(row.to_concept(placeholder(row.line))),
                }
            }
            let ids = numeric_ids(&draft.rows, scheme_uri.as_str());
            for (u, n) in ids {
                if let Some(c) = state.concepts.get_mut(&u) {
                    c.numeric_id = Some(n);
                }
            }
            Ok(Parsed { state, issues: draft.issues, unminted })
        }
        Format::Structured => {
            let text = std::str::from_utf8(payload).map_err(|e| RegistryError::ParseFailed(e.to_string()))?;
            let state: SchemeState = wire::from_str(text.trim_end())?;
            Ok(Parsed { state, issues: Vec::new(), unminted: Vec::new() })
        }
    }
}

/// Checks a payload without touching any registry. Returns every violation
/// found, errors and warnings alike.
pub fn validate_payload(payload: &[u8], format: Format, vocab: &kos::Vocabulary) -> Result<Vec<Violation>> {
    let scheme_uri = Uri::parse("http://validate.invalid/scheme")?;
    let parsed = parse_payload(payload, format, vocab, &scheme_uri)?;
    let mut state = parsed.state;
    for (i, c) in parsed.unminted.into_iter().enumerate() {
        let mut c = c;
        c.uri = Uri::parse(&format!("http://validate.invalid/scheme/row{i}"))?;
        state.concepts.insert(c.uri.clone(), c);
    }
    let mut v = parsed.issues;
    v.extend(validation::validate(&state));
    validation::sort_violations(&mut v);
    Ok(v)
}

fn creation_batch(meta: SchemeCreation, state: &SchemeState) -> Vec<PendingEvent> {
    let mut head = PendingEvent::new(EventKind::SchemeCreated, Vec::new(), Vec::new());
    head.scheme_change = Some(SchemeChange::Created(meta));
    let mut out = vec![head];
    for c in state.concepts.values() {
        let items = diff_concepts(&Concept::blank(c.uri.clone()), c).expect("same URI");
        out.push(PendingEvent::new(EventKind::ConceptCreated, vec![c.uri.clone()], items));
    }
    out
}

fn contains_ci(hay: &str, needle: &str) -> bool {
    hay.to_lowercase().contains(needle)
}

fn state_matches(token: &str, state: &SchemeState, q: &str) -> bool {
    contains_ci(token, q)
        || contains_ci(&state.title, q)
        || state
            .concepts
            .values()
            .any(|c| c.pref_labels.values().chain(c.alt_labels.values().flatten()).any(|l| contains_ci(l, q)))
}

impl Registry {
    /// Creates an empty scheme at version 1.
    pub fn create_scheme(&self, owner: &AgentId, token: &str, title: &str, description: &str, strategy: UriStrategy) -> Result<SchemeMeta> {
        let base = self.scheme_base(token, &strategy)?;
        let state = SchemeState::new(Uri::parse(&format!("{base}/{token}"))?, title, description);
        self.create_from_state(owner, token, state, strategy, Vec::new())?;
        self.scheme_meta(token)
    }

    fn scheme_base(&self, token: &str, strategy: &UriStrategy) -> Result<String> {
        if !mint::is_valid_token(token) {
            return Err(RegistryError::BadToken(token.to_string()));
        }
        mint::check_strategy(strategy, token, &self.cfg.base_uri)
    }

    /// Validates `state` against the registry and writes it as version 1.
    fn create_from_state(&self, owner: &AgentId, token: &str, state: SchemeState, strategy: UriStrategy, issues: Vec<Violation>) -> Result<u64> {
        self.require_agent(owner)?;
        if self.store.contains(token) {
            return Err(RegistryError::TokenTaken(token.to_string()));
        }
        let mut uris = self.uris.lock().unwrap();
        if uris.contains_key(&state.uri) {
            return Err(RegistryError::DuplicateUri(state.uri.clone()));
        }
        let mut violations = issues;
        violations.extend(validation::validate_in_registry(&state, |u| uris.contains_key(u)));
        let errors: Vec<Violation> = violations.into_iter().filter(Violation::is_error).collect();
        if !errors.is_empty() {
            return Err(RegistryError::ValidationFailed(errors));
        }
        let creation = SchemeCreation {
            token: token.to_string(),
            uri: state.uri.clone(),
            title: state.title.clone(),
            description: state.description.clone(),
            owner: owner.clone(),
            strategy,
            extras: state.extras.clone(),
        };
        let handle = self.store.create(token, creation_batch(creation, &state), owner, self.clock.now())?;
        let (meta, events) = {
            let log = handle.lock().unwrap();
            (log.head_state().meta.clone(), log.batches()[0].clone())
        };
        uris.insert(state.uri.clone(), token.to_string());
        let created: Vec<Uri> = state.concepts.keys().cloned().collect();
        for u in &created {
            uris.insert(u.clone(), token.to_string());
        }
        drop(uris);
        self.emit_commit(&meta, 1, &events, &created);
        Ok(1)
    }

    /// Creates a scheme from a vocabulary file in one atomic commit.
    pub fn import(&self, req: &ImportRequest, payload: &[u8]) -> Result<SchemeMeta> {
        let strategy = req.strategy.clone().unwrap_or_else(|| UriStrategy::registry_assigned(None));
        let base = self.scheme_base(&req.token, &strategy)?;
        let default_uri = Uri::parse(&format!("{base}/{}", req.token))?;
        let parsed = parse_payload(payload, req.format, &self.vocab, &default_uri)?;
        let mut state = parsed.state;
        if let Some(t) = &req.title {
            state.title = t.clone();
        }
        if let Some(d) = &req.description {
            state.description = d.clone();
        }
        if !parsed.unminted.is_empty() {
            let uris = self.uris.lock().unwrap();
            let taken = |u: &Uri| uris.contains_key(u);
            let mut minter = Minter {
                strategy: strategy.clone(),
                token: req.token.clone(),
                base: &base,
                next: 1,
                taken: &taken,
                fresh: state.concepts.keys().cloned().collect(),
            };
            for n in state.concepts.values().filter_map(|c| c.numeric_id) {
                minter.observe(n);
            }
            for mut c in parsed.unminted {
                let m = minter.mint(None, c.display_label())?;
                c.uri = m.uri;
                c.numeric_id = m.numeric_id;
                state.concepts.insert(c.uri.clone(), c);
            }
        }
        self.create_from_state(&req.owner, &req.token, state, strategy, parsed.issues)?;
        self.scheme_meta(&req.token)
    }

    pub(super) fn create_status_scheme(&self) -> Result<()> {
        let owner = self.system_agent();
        let base = self.scheme_base(STATUS_TOKEN, &UriStrategy::provided())?;
        let uri = Uri::parse(&format!("{base}/{STATUS_TOKEN}"))?;
        let mut state = SchemeState::new(uri, "Term status", "Lifecycle states of registered terms.");
        for (term, def) in [
            (StatusTerm::Proposed, "Submitted for use but not yet approved."),
            (StatusTerm::Approved, "Approved for use."),
            (StatusTerm::Deprecated, "No longer recommended; retained so existing references resolve."),
        ] {
            let mut c = Concept::blank(Uri::parse(&format!("{base}/{STATUS_TOKEN}/{}", term.as_str()))?);
            let label = LangText::new("en", term.as_str());
            c.pref_labels.insert(label.lang, label.text);
            c.definition.insert("en".into(), def.into());
            c.status = StatusTerm::Approved;
            state.concepts.insert(c.uri.clone(), c);
        }
        self.create_from_state(&owner, STATUS_TOKEN, state, UriStrategy::provided(), Vec::new())?;
        Ok(())
    }

    /// Serializes the scheme at `version` (head when absent). Returns the
    /// version actually exported.
    pub fn export(&self, token: &str, version: Option<u64>, format: Format) -> Result<(String, LossReport, u64)> {
        if Registry::is_copy_id(token) {
            let c = self.copy_at(token, version)?;
            let (body, losses) = export_state(&c.state, format, &self.vocab);
            return Ok((body, losses, c.seq));
        }
        let handle = self.store.get(token)?;
        let log = handle.lock().unwrap();
        let v = version.unwrap_or(log.head());
        let m = if v == log.head() && v > 0 { log.head_state().clone() } else { log.materialize(v)? };
        drop(log);
        let (body, losses) = export_state(&m.state, format, &self.vocab);
        Ok((body, losses, v))
    }

    /// Hosted schemes and sequenced copies, optionally filtered by a
    /// case-insensitive substring of token, title or any label.
    pub fn list_schemes(&self, query: Option<&str>) -> Result<Vec<SchemeSummary>> {
        let q = match query {
            Some(q) if q.is_empty() => return Err(RegistryError::InvalidInput("empty query".into())),
            Some(q) => Some(q.to_lowercase()),
            None => None,
        };
        let mut out = Vec::new();
        for token in self.store.tokens() {
            let m = self.head_state(&token)?;
            if q.as_deref().is_some_and(|q| !state_matches(&token, &m.state, q)) {
                continue;
            }
            out.push(SchemeSummary {
                token: token.clone(),
                kind: SchemeKind::Hosted,
                uri: m.state.uri.clone(),
                title: m.state.title.clone(),
                version: m.meta.head_version,
                concepts: m.state.concepts.len(),
                owner: Some(m.meta.owner.clone()),
                source: None,
            });
        }
        let dir = self.dir.lock().unwrap();
        for (id, seq) in &dir.state().copies {
            let Some(c) = seq.last() else { continue };
            if q.as_deref().is_some_and(|q| !state_matches(id, &c.state, q)) {
                continue;
            }
            out.push(SchemeSummary {
                token: id.clone(),
                kind: SchemeKind::Copy,
                uri: c.scheme_uri.clone(),
                title: c.state.title.clone(),
                version: c.seq,
                concepts: c.state.concepts.len(),
                owner: None,
                source: Some(c.source.clone()),
            });
        }
        Ok(out)
    }

    /// Looks a concept up by numeric id, last URI segment or full URI.
    pub fn get_concept(&self, token: &str, id: &str) -> Result<Concept> {
        let m = self.head_state(token)?;
        if let Ok(u) = Uri::parse(id) {
            if let Some(c) = m.state.concepts.get(&u) {
                return Ok(c.clone());
            }
        }
        if let Ok(n) = id.parse::<u64>() {
            if let Some(c) = m.state.concepts.values().find(|c| c.numeric_id == Some(n)) {
                return Ok(c.clone());
            }
        }
        m.state
            .concepts
            .values()
            .find(|c| c.uri.path_segments().last() == Some(id))
            .cloned()
            .ok_or_else(|| RegistryError::UnknownConcept(id.to_string()))
    }

    /// The scheme token and head state of any hosted URI.
    pub fn resolve(&self, uri: &Uri) -> Result<(String, Option<Concept>)> {
        let token = self.uris.lock().unwrap().get(uri).cloned().ok_or_else(|| RegistryError::UnknownConcept(uri.to_string()))?;
        let m = self.head_state(&token)?;
        Ok((token, m.state.concepts.get(uri).cloned()))
    }

    /// Committed events after `since`, in commit order.
    pub fn changes_since(&self, token: &str, since: Since) -> Result<Vec<ChangeEvent>> {
        let handle = self.store.get(token)?;
        let log = handle.lock().unwrap();
        let head = log.head();
        match since {
            Since::Version(v) if v > head => Err(RegistryError::UnknownVersion(v)),
            Since::Version(v) if v == head => Ok(Vec::new()),
            Since::Version(v) => log.read(v + 1, head),
            Since::Time(t) => Ok(log.batches().iter().flatten().filter(|e| e.timestamp > t).cloned().collect()),
        }
    }

    /// Full history, or only the events touching `uri`.
    pub fn history(&self, token: &str, uri: Option<&Uri>) -> Result<Vec<ChangeEvent>> {
        let handle = self.store.get(token)?;
        let log = handle.lock().unwrap();
        Ok(log.batches().iter().flatten().filter(|e| uri.is_none_or(|u| e.touches(u))).cloned().collect())
    }

    /// Difference between two versions of a hosted scheme. Version 0 is the
    /// empty scheme.
    pub fn diff_versions(&self, token: &str, from: u64, to: u64) -> Result<SchemeDiff> {
        let handle = self.store.get(token)?;
        let log = handle.lock().unwrap();
        let b = log.materialize(to)?.state;
        let a = match from {
            0 => SchemeState::new(b.uri.clone(), "", ""),
            v => log.materialize(v)?.state,
        };
        Ok(diff_states(&a, &b))
    }

    /// Every hosted URI, scheme URIs included.
    pub fn known_uris(&self) -> BTreeSet<Uri> {
        self.uris.lock().unwrap().keys().cloned().collect()
    }

    pub fn is_copy_id(id: &str) -> bool {
        id.starts_with(COPY_ID_PREFIX)
    }
}
