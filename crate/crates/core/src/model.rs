//! Domain types: agents, schemes, concepts and the status vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{RegistryError, Result};
use crate::rdf::Triple;

/// An absolute IRI: a scheme, `://`, a non-empty authority, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Uri(String);

impl Uri {
    pub fn parse(s: &str) -> Result<Uri> {
        check_absolute(s).map_err(|why| RegistryError::BadUri(s.to_string(), why.to_string()))?;
        Ok(Uri(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Path segments after the authority, ignoring query and fragment.
    pub fn path_segments(&self) -> impl Iterator<Item = &str> {
        let rest = &self.0[self.0.find("://").map(|i| i + 3).unwrap_or(0)..];
        let rest = rest.split(['?', '#']).next().unwrap_or("");
        rest.split('/').skip(1).filter(|s| !s.is_empty())
    }
}

pub(crate) fn check_absolute(s: &str) -> std::result::Result<(), &'static str> {
    if s.chars().any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`')) {
        return Err("contains whitespace or characters not allowed in an IRI");
    }
    let Some(idx) = s.find("://") else {
        return Err("not absolute: missing scheme and authority");
    };
    let scheme = &s[..idx];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return Err("not absolute: bad scheme"),
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return Err("not absolute: bad scheme");
    }
    let authority = s[idx + 3..].split(['/', '?', '#']).next().unwrap_or("");
    if authority.is_empty() {
        return Err("not absolute: empty authority");
    }
    Ok(())
}

impl TryFrom<String> for Uri {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        check_absolute(&s).map_err(|why| format!("bad URI `{s}`: {why}"))?;
        Ok(Uri(s))
    }
}

impl From<Uri> for String {
    fn from(u: Uri) -> String {
        u.0
    }
}

impl fmt::Display for Uri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Uri {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self> {
        Uri::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Individual,
    Organization,
}

impl FromStr for AgentKind {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(AgentKind::Individual),
            "organization" => Ok(AgentKind::Organization),
            other => Err(RegistryError::InvalidInput(format!("unknown agent kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contact {
    pub label: String,
    pub address: String,
}

impl Contact {
    pub fn new(label: impl Into<String>, address: impl Into<String>) -> Self {
        Contact { label: label.into(), address: address.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub kind: AgentKind,
    pub name: String,
    pub contacts: Vec<Contact>,
}

/// Term lifecycle status. The registry also publishes these values as the
/// hosted `status` scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusTerm {
    Proposed,
    Approved,
    Deprecated,
}

impl StatusTerm {
    pub const ALL: [StatusTerm; 3] = [StatusTerm::Proposed, StatusTerm::Approved, StatusTerm::Deprecated];

    pub fn as_str(self) -> &'static str {
        match self {
            StatusTerm::Proposed => "proposed",
            StatusTerm::Approved => "approved",
            StatusTerm::Deprecated => "deprecated",
        }
    }
}

impl fmt::Display for StatusTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatusTerm {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self> {
        StatusTerm::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| RegistryError::InvalidInput(format!("`{s}` is not a registered status term")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Provided,
    Template,
    RegistryAssigned,
}

impl FromStr for StrategyKind {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "provided" => Ok(StrategyKind::Provided),
            "template" => Ok(StrategyKind::Template),
            "registry_assigned" | "registry" => Ok(StrategyKind::RegistryAssigned),
            other => Err(RegistryError::BadStrategy(format!("unknown strategy kind `{other}`"))),
        }
    }
}

/// How concept URIs are obtained for a scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UriStrategy {
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    /// Owner-supplied base; the registry's own base is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
}

impl UriStrategy {
    pub fn provided() -> Self {
        UriStrategy { kind: StrategyKind::Provided, template: None, base: None }
    }

    pub fn registry_assigned(base: Option<&str>) -> Self {
        UriStrategy { kind: StrategyKind::RegistryAssigned, template: None, base: base.map(str::to_string) }
    }

    pub fn template(template: &str, base: Option<&str>) -> Self {
        UriStrategy {
            kind: StrategyKind::Template,
            template: Some(template.to_string()),
            base: base.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeMeta {
    pub token: String,
    pub uri: Uri,
    pub title: String,
    pub description: String,
    pub owner: AgentId,
    /// Explicitly designated maintainers; the owner is implicitly one as well.
    pub maintainers: BTreeSet<AgentId>,
    pub uri_strategy: UriStrategy,
    pub created_at: DateTime<Utc>,
    pub head_version: u64,
    /// Next numeric concept identifier. Never decreases.
    pub next_numeric: u64,
}

impl SchemeMeta {
    pub fn is_maintainer(&self, agent: &AgentId) -> bool {
        &self.owner == agent || self.maintainers.contains(agent)
    }

    /// Owner plus designated maintainers, owner first.
    pub fn contacts(&self) -> Vec<AgentId> {
        let mut out = vec![self.owner.clone()];
        out.extend(self.maintainers.iter().filter(|a| **a != self.owner).cloned());
        out
    }
}

/// One vocabulary term. `narrower` is never stored; see [`SchemeState::narrower`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub uri: Uri,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_id: Option<u64>,
    #[serde(default)]
    pub pref_labels: BTreeMap<String, String>,
    #[serde(default)]
    pub alt_labels: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub definition: BTreeMap<String, String>,
    #[serde(default)]
    pub scope_note: BTreeMap<String, String>,
    #[serde(default)]
    pub broader: BTreeSet<Uri>,
    #[serde(default)]
    pub related: BTreeSet<Uri>,
    pub status: StatusTerm,
    #[serde(default)]
    pub replaced_by: BTreeSet<Uri>,
    #[serde(default)]
    pub replaces: BTreeSet<Uri>,
    #[serde(default)]
    pub notes: BTreeSet<String>,
    #[serde(default)]
    pub extras: BTreeSet<Triple>,
}

impl Concept {
    /// The empty concept a creation diff starts from.
    pub fn blank(uri: Uri) -> Self {
        Concept {
            uri,
            numeric_id: None,
            pref_labels: BTreeMap::new(),
            alt_labels: BTreeMap::new(),
            definition: BTreeMap::new(),
            scope_note: BTreeMap::new(),
            broader: BTreeSet::new(),
            related: BTreeSet::new(),
            status: StatusTerm::Proposed,
            replaced_by: BTreeSet::new(),
            replaces: BTreeSet::new(),
            notes: BTreeSet::new(),
            extras: BTreeSet::new(),
        }
    }

    pub fn is_deprecated(&self) -> bool {
        self.status == StatusTerm::Deprecated
    }

    pub fn has_definition(&self) -> bool {
        !self.definition.is_empty()
    }

    /// English label if present, otherwise the first label by language tag.
    pub fn display_label(&self) -> Option<&str> {
        self.pref_labels
            .get("en")
            .or_else(|| self.pref_labels.values().next())
            .map(String::as_str)
    }
}

/// Full materialized content of a concept scheme at one version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeState {
    pub uri: Uri,
    pub title: String,
    pub description: String,
    /// Unrecognized statements about the scheme subject, preserved verbatim.
    #[serde(default)]
    pub extras: BTreeSet<Triple>,
    pub concepts: BTreeMap<Uri, Concept>,
}

impl SchemeState {
    pub fn new(uri: Uri, title: impl Into<String>, description: impl Into<String>) -> Self {
        SchemeState {
            uri,
            title: title.into(),
            description: description.into(),
            extras: BTreeSet::new(),
            concepts: BTreeMap::new(),
        }
    }

    /// Concepts whose `broader` contains `uri`.
    pub fn narrower(&self, uri: &Uri) -> Vec<&Uri> {
        self.concepts
            .values()
            .filter(|c| c.broader.contains(uri))
            .map(|c| &c.uri)
            .collect()
    }

    /// True if `uri` is shaped like a member of this scheme's namespace.
    pub fn in_namespace(&self, uri: &Uri) -> bool {
        let base = self.uri.as_str().trim_end_matches('/');
        uri.as_str()
            .strip_prefix(base)
            .is_some_and(|rest| rest.starts_with('/') && rest.len() > 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LangText {
    pub lang: String,
    pub text: String,
}

impl LangText {
    pub fn new(lang: &str, text: &str) -> Self {
        LangText { lang: lang.to_string(), text: text.to_string() }
    }
}

/// Author-supplied content for a new concept. Multi-valued on purpose so that
/// validation can report what a [`Concept`] cannot represent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptDraft {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<Uri>,
    #[serde(default)]
    pub pref_labels: Vec<LangText>,
    #[serde(default)]
    pub alt_labels: Vec<LangText>,
    #[serde(default)]
    pub definitions: Vec<LangText>,
    #[serde(default)]
    pub scope_notes: Vec<LangText>,
    #[serde(default)]
    pub broader: Vec<Uri>,
    #[serde(default)]
    pub related: Vec<Uri>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl ConceptDraft {
    pub fn labelled(lang: &str, text: &str) -> Self {
        ConceptDraft { pref_labels: vec![LangText::new(lang, text)], ..Default::default() }
    }

    pub fn label_hint(&self) -> Option<&str> {
        self.pref_labels
            .iter()
            .find(|l| l.lang == "en")
            .or_else(|| self.pref_labels.first())
            .map(|l| l.text.as_str())
    }
}
