//! Change tracking: field-level diffs, semantic-change classification,
//! event application and scheme-level comparisons.

mod classify;
mod diff;
mod edit;
mod listing;
mod replay;
mod succession;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{RegistryError, Result};
use crate::model::{AgentId, Uri, UriStrategy};
use crate::rdf::Triple;

pub use classify::{classify, rule_for};
pub use diff::{apply_items, diff_concepts, diff_states, MetadataChange, SchemeDiff};
pub use edit::{apply_edits, Edit};
pub use listing::{render_diff, render_event, render_item, render_value};
pub use replay::{apply_pending, apply_to_state, replay, Materialized};
pub use succession::check_succession;

/// Which part of a concept a [`ChangeItem`] touches.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldPath {
    PrefLabel(String),
    AltLabel(String),
    Definition(String),
    ScopeNote(String),
    Broader,
    Related,
    Status,
    Note,
    /// Unrecognized imported statement about the concept.
    Extra,
    Replaces,
    ReplacedBy,
    NumericId,
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldPath::PrefLabel(l) => write!(f, "pref_label({l})"),
            FieldPath::AltLabel(l) => write!(f, "alt_label({l})"),
            FieldPath::Definition(l) => write!(f, "definition({l})"),
            FieldPath::ScopeNote(l) => write!(f, "scope_note({l})"),
            FieldPath::Broader => f.write_str("broader"),
            FieldPath::Related => f.write_str("related"),
            FieldPath::Status => f.write_str("status"),
            FieldPath::Note => f.write_str("note"),
            FieldPath::Extra => f.write_str("extra"),
            FieldPath::Replaces => f.write_str("replaces"),
            FieldPath::ReplacedBy => f.write_str("replaced_by"),
            FieldPath::NumericId => f.write_str("numeric_id"),
        }
    }
}

impl FromStr for FieldPath {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || RegistryError::InvalidInput(format!("unknown field path `{s}`"));
        if let Some((name, rest)) = s.split_once('(') {
            let lang = rest.strip_suffix(')').ok_or_else(bad)?.to_string();
            return match name {
                "pref_label" => Ok(FieldPath::PrefLabel(lang)),
                "alt_label" => Ok(FieldPath::AltLabel(lang)),
                "definition" => Ok(FieldPath::Definition(lang)),
                "scope_note" => Ok(FieldPath::ScopeNote(lang)),
                _ => Err(bad()),
            };
        }
        match s {
            "broader" => Ok(FieldPath::Broader),
            "related" => Ok(FieldPath::Related),
            "status" => Ok(FieldPath::Status),
            "note" => Ok(FieldPath::Note),
            "extra" => Ok(FieldPath::Extra),
            "replaces" => Ok(FieldPath::Replaces),
            "replaced_by" => Ok(FieldPath::ReplacedBy),
            "numeric_id" => Ok(FieldPath::NumericId),
            _ => Err(bad()),
        }
    }
}

impl Serialize for FieldPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FieldPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeOp {
    Add,
    Remove,
    Modify,
}

impl ChangeOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeOp::Add => "add",
            ChangeOp::Remove => "remove",
            ChangeOp::Modify => "modify",
        }
    }
}

/// One field-level difference on one concept. Values are carried as text:
/// labels and notes verbatim, URIs as strings, extras as N-Triples lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeItem {
    pub concept: Uri,
    pub field: FieldPath,
    pub op: ChangeOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new: Option<String>,
}

impl ChangeItem {
    pub fn add(concept: &Uri, field: FieldPath, new: impl Into<String>) -> Self {
        ChangeItem { concept: concept.clone(), field, op: ChangeOp::Add, old: None, new: Some(new.into()) }
    }

    pub fn remove(concept: &Uri, field: FieldPath, old: impl Into<String>) -> Self {
        ChangeItem { concept: concept.clone(), field, op: ChangeOp::Remove, old: Some(old.into()), new: None }
    }

    pub fn modify(concept: &Uri, field: FieldPath, old: impl Into<String>, new: impl Into<String>) -> Self {
        ChangeItem {
            concept: concept.clone(),
            field,
            op: ChangeOp::Modify,
            old: Some(old.into()),
            new: Some(new.into()),
        }
    }

    /// op=add ⇒ no old; op=remove ⇒ no new; op=modify ⇒ both, unequal.
    pub fn is_well_formed(&self) -> bool {
        match self.op {
            ChangeOp::Add => self.old.is_none() && self.new.is_some(),
            ChangeOp::Remove => self.old.is_some() && self.new.is_none(),
            ChangeOp::Modify => self.old.is_some() && self.new.is_some() && self.old != self.new,
        }
    }

    pub(crate) fn sort_key(&self) -> (String, &str, &str) {
        (self.field.to_string(), self.old.as_deref().unwrap_or(""), self.new.as_deref().unwrap_or(""))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase")]
pub enum Outcome {
    NonSemantic,
    Semantic,
    NeedsConfirmation,
}

/// Classification rule codes. `NS*` keep the URI, `S*` require a successor,
/// `NC*` need the maintainer to say which.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleCode {
    NS1,
    NS2,
    NS3,
    NS4,
    NS5,
    NS6,
    S1,
    S2,
    S3,
    NC1,
    NC2,
}

impl RuleCode {
    pub fn is_semantic(self) -> bool {
        matches!(self, RuleCode::S1 | RuleCode::S2 | RuleCode::S3)
    }

    pub fn needs_confirmation(self) -> bool {
        matches!(self, RuleCode::NC1 | RuleCode::NC2)
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub outcome: Outcome,
    pub reasons: BTreeSet<RuleCode>,
    #[serde(default)]
    pub questions: Vec<String>,
}

impl Classification {
    pub fn semantic(reason: RuleCode) -> Self {
        Classification { outcome: Outcome::Semantic, reasons: [reason].into(), questions: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaintainerAssertion {
    Clarification,
    MeaningChange,
}

impl FromStr for MaintainerAssertion {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clarification" => Ok(MaintainerAssertion::Clarification),
            "meaning_change" => Ok(MaintainerAssertion::MeaningChange),
            other => Err(RegistryError::InvalidInput(format!("unknown assertion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    SchemeCreated,
    SchemeMetadataUpdated,
    ConceptCreated,
    ConceptUpdated,
    ConceptDeprecated,
    ConceptSplit,
    ConceptMerged,
}

impl EventKind {
    /// Kinds whose items may introduce concepts not yet in the scheme.
    pub fn may_create(self) -> bool {
        matches!(self, EventKind::SchemeCreated | EventKind::ConceptCreated | EventKind::ConceptSplit | EventKind::ConceptMerged)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeCreation {
    pub token: String,
    pub uri: Uri,
    pub title: String,
    pub description: String,
    pub owner: AgentId,
    pub strategy: UriStrategy,
    #[serde(default)]
    pub extras: BTreeSet<Triple>,
}

/// Scheme-level payload for events that are not about concepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SchemeChange {
    Created(SchemeCreation),
    MaintainerAdded { agent: AgentId },
}

/// An event prepared for commit; the commit stamps version, seq, time and author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingEvent {
    pub kind: EventKind,
    pub concept_uris: Vec<Uri>,
    pub items: Vec<ChangeItem>,
    pub classification: Option<Classification>,
    pub note: Option<String>,
    pub scheme_change: Option<SchemeChange>,
}

impl PendingEvent {
    pub fn new(kind: EventKind, concept_uris: Vec<Uri>, items: Vec<ChangeItem>) -> Self {
        PendingEvent { kind, concept_uris, items, classification: None, note: None, scheme_change: None }
    }

    pub fn with_classification(mut self, c: Classification) -> Self {
        self.classification = Some(c);
        self
    }

    pub fn stamp(self, scheme: &str, version: u64, seq: u64, timestamp: DateTime<Utc>, author: &AgentId) -> ChangeEvent {
        ChangeEvent {
            scheme: scheme.to_string(),
            version,
            seq,
            timestamp,
            author: author.clone(),
            kind: self.kind,
            concept_uris: self.concept_uris,
            items: self.items,
            classification: self.classification,
            note: self.note,
            scheme_change: self.scheme_change,
        }
    }
}

/// A committed, author-attributed entry of a scheme's append-only history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeEvent {
    pub scheme: String,
    pub version: u64,
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    pub author: AgentId,
    pub kind: EventKind,
    pub concept_uris: Vec<Uri>,
    pub items: Vec<ChangeItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme_change: Option<SchemeChange>,
}

impl ChangeEvent {
    pub fn touches(&self, uri: &Uri) -> bool {
        self.concept_uris.contains(uri) || self.items.iter().any(|i| &i.concept == uri)
    }
}
