//! Concept URI assignment: owner-provided URIs, owner templates and
//! registry-assigned numeric URIs.
//!
//! Minted URIs are slash URIs and never carry version information. Numeric
//! identifiers come from a per-scheme counter that only moves forward.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{RegistryError, Result};
use crate::model::{check_absolute, StrategyKind, Uri, UriStrategy};
use crate::validation::{Rule, Severity, Violation};

static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[a-z0-9-]{1,32}$").unwrap());
static VERSION_SEGMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[vV][0-9]+(\.[0-9]+)*$").unwrap());
static ISO_DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[0-9]{4}-[0-9]{2}-[0-9]{2}").unwrap());

pub fn is_valid_token(token: &str) -> bool {
    TOKEN_RE.is_match(token)
}

/// `v<digits>` segments or anything containing an ISO date.
pub fn is_version_marker(segment: &str) -> bool {
    VERSION_SEGMENT.is_match(segment) || ISO_DATE.is_match(segment)
}

pub fn has_version_marker(uri: &str) -> bool {
    let rest = &uri[uri.find("://").map(|i| i + 3).unwrap_or(0)..];
    let rest = rest.split(['?', '#']).next().unwrap_or("");
    rest.split('/').skip(1).any(is_version_marker)
}

/// Lowercase ASCII alphanumerics; every other run of characters becomes one hyphen.
pub fn slugify(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    let mut pending_hyphen = false;
    for ch in label.chars() {
        if ch.is_ascii_alphanumeric() {
            if pending_hyphen && !out.is_empty() {
                out.push('-');
            }
            pending_hyphen = false;
            out.push(ch.to_ascii_lowercase());
        } else {
            pending_hyphen = true;
        }
    }
    out
}

/// Checks a strategy for a scheme token and returns the resolved base (no
/// trailing slash) that minting will use.
pub fn check_strategy(strategy: &UriStrategy, token: &str, registry_base: &str) -> Result<String> {
    let base = strategy.base.as_deref().unwrap_or(registry_base).trim_end_matches('/').to_string();
    check_absolute(&base).map_err(|why| RegistryError::BadStrategy(format!("base `{base}`: {why}")))?;
    if base.contains('#') {
        return Err(RegistryError::BadStrategy("hash namespaces are not supported; use a slash base".into()));
    }
    match strategy.kind {
        StrategyKind::Provided => {
            if strategy.template.is_some() {
                return Err(RegistryError::BadStrategy("a provided strategy takes no template".into()));
            }
            return Ok(base);
        }
        StrategyKind::RegistryAssigned => {
            if strategy.template.is_some() {
                return Err(RegistryError::BadStrategy("registry assignment takes no template".into()));
            }
        }
        StrategyKind::Template => {
            let Some(t) = strategy.template.as_deref() else {
                return Err(RegistryError::BadStrategy("template strategy requires a template".into()));
            };
            for placeholder in ["{base}", "{token}"] {
                if !t.contains(placeholder) {
                    return Err(RegistryError::BadStrategy(format!("template lacks {placeholder}")));
                }
            }
            let numeric = t.matches("{numeric}").count();
            let slug = t.matches("{slug}").count();
            if numeric + slug != 1 {
                return Err(RegistryError::BadStrategy(
                    "template needs exactly one of {numeric} or {slug}".into(),
                ));
            }
            if t.contains('#') {
                return Err(RegistryError::BadStrategy("hash namespaces are not supported".into()));
            }
            let probe = t.replace("{base}", &base).replace("{token}", token).replace("{numeric}", "1").replace("{slug}", "x");
            if check_absolute(&probe).is_err() || probe.contains('{') {
                return Err(RegistryError::BadStrategy(format!("template does not yield an absolute URI: `{probe}`")));
            }
        }
    }
    if has_version_marker(&base) {
        return Err(RegistryError::BadStrategy(format!("base `{base}` carries version information")));
    }
    if is_version_marker(token) {
        return Err(RegistryError::BadToken(token.to_string()));
    }
    Ok(base)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MintRequest {
    pub strategy: UriStrategy,
    pub scheme_token: String,
    pub provided_uri: Option<String>,
    pub label_hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minted {
    pub uri: Uri,
    /// Counter value consumed, if any. The caller advances the counter past it.
    pub numeric_id: Option<u64>,
    pub warnings: Vec<Violation>,
}

/// Produces a URI for `req`. Pure in `(req, registry_base, next_numeric)`; the
/// `is_taken` oracle answers registry-wide uniqueness.
pub fn mint(
    req: &MintRequest,
    registry_base: &str,
    next_numeric: u64,
    is_taken: impl Fn(&Uri) -> bool,
) -> Result<Minted> {
    let base = check_strategy(&req.strategy, &req.scheme_token, registry_base)?;
    let (candidate, numeric_id, minted) = match (&req.strategy.kind, &req.provided_uri) {
        (_, Some(provided)) => (provided.clone(), None, false),
        (StrategyKind::Provided, None) => {
            return Err(RegistryError::MintFailed("this scheme requires owner-provided URIs".into()))
        }
        (StrategyKind::RegistryAssigned, None) => {
            (format!("{base}/{}/{next_numeric}", req.scheme_token), Some(next_numeric), true)
        }
        (StrategyKind::Template, None) => {
            let template = req.strategy.template.as_deref().unwrap_or_default();
            let mut s = template.replace("{base}", &base).replace("{token}", &req.scheme_token);
            let mut numeric_id = None;
            if s.contains("{numeric}") {
                s = s.replace("{numeric}", &next_numeric.to_string());
                numeric_id = Some(next_numeric);
            } else {
                let slug = req.label_hint.as_deref().map(slugify).unwrap_or_default();
                if slug.is_empty() {
                    return Err(RegistryError::MintFailed(RegistryError::MissingLabelForSlug.to_string()));
                }
                s = s.replace("{slug}", &slug);
            }
            (s, numeric_id, true)
        }
    };

    let uri = Uri::parse(&candidate)?;
    if is_taken(&uri) {
        return Err(RegistryError::DuplicateUri(uri));
    }
    let issues = validate_uri(&candidate, minted, |_| false);
    if let Some(err) = issues.iter().find(|v| v.severity == Severity::Error) {
        return Err(RegistryError::BadUri(candidate, err.message.clone()));
    }
    Ok(Minted { uri, numeric_id, warnings: issues })
}

/// Absoluteness, uniqueness and version-marker checks. A version marker in an
/// owner-provided URI (`minted == false`) is only a warning.
pub fn validate_uri(uri: &str, minted: bool, is_taken: impl Fn(&Uri) -> bool) -> Vec<Violation> {
    let mut out = Vec::new();
    let parsed = match Uri::parse(uri) {
        Ok(u) => u,
        Err(_) => {
            let why = check_absolute(uri).err().unwrap_or("malformed");
            out.push(Violation::new(Rule::R8, None, Severity::Error, why.to_string()));
            return out;
        }
    };
    if is_taken(&parsed) {
        out.push(Violation::new(Rule::R8, Some(parsed.clone()), Severity::Error, "duplicate URI".into()));
    }
    if has_version_marker(uri) {
        let severity = if minted { Severity::Error } else { Severity::Warning };
        out.push(Violation::new(Rule::R8, Some(parsed), severity, "URI carries version information".into()));
    }
    out
}

/// Per-scheme numeric counter. Values handed out are never handed out again.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counter {
    next: u64,
}

impl Counter {
    pub fn starting_at(next: u64) -> Self {
        Counter { next: next.max(1) }
    }

    pub fn peek(&self) -> u64 {
        self.next
    }

    pub fn reserve(&mut self) -> u64 {
        let n = self.next;
        self.next += 1;
        n
    }

    /// Moves the counter past `used` if it is not already.
    pub fn observe(&mut self, used: u64) {
        self.next = self.next.max(used + 1);
    }
}
