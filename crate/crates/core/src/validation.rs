//! SKOS-subset integrity rules R1–R8, applied at import and before every commit.
//!
//! | rule | checks |
//! |------|--------|
//! | R1 | at most one prefLabel per language |
//! | R2 | a prefLabel is not also an altLabel in the same language |
//! | R3 | broader/related targets inside the scheme namespace exist |
//! | R4 | the broader graph is acyclic |
//! | R5 | broader and related are disjoint |
//! | R6 | status is a registered status term |
//! | R7 | inScheme names the containing scheme |
//! | R8 | concept URIs are well formed and unique |

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{apply_pending, PendingEvent};
use crate::error::Result;
use crate::mint;
use crate::model::{Concept, ConceptDraft, SchemeState, StatusTerm, Uri};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R3 => "R3",
            Rule::R4 => "R4",
            Rule::R5 => "R5",
            Rule::R6 => "R6",
            Rule::R7 => "R7",
            Rule::R8 => "R8",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub concept: Option<Uri>,
    pub severity: Severity,
    pub message: String,
}

impl Violation {
    pub fn new(rule: Rule, concept: Option<Uri>, severity: Severity, message: String) -> Self {
        Violation { rule, concept, severity, message }
    }

    pub fn error(rule: Rule, concept: &Uri, message: impl Into<String>) -> Self {
        Violation::new(rule, Some(concept.clone()), Severity::Error, message.into())
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `RULE <id> <uri> <message>`; `-` stands in for a missing URI.
impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let uri = self.concept.as_ref().map(Uri::as_str).unwrap_or("-");
        let sev = match self.severity {
            Severity::Error => "",
            Severity::Warning => "warning: ",
        };
        write!(f, "RULE {} {} {}{}", self.rule.as_str(), uri, sev, self.message)
    }
}

pub fn has_errors(v: &[Violation]) -> bool {
    v.iter().any(Violation::is_error)
}

pub(crate) fn sort_violations(v: &mut Vec<Violation>) {
    v.sort_by(|a, b| (a.rule, &a.concept, &a.message).cmp(&(b.rule, &b.concept, &b.message)));
    v.dedup();
}

/// Every violation of R1–R8 that a materialized state can exhibit, ordered
/// by rule then URI. Draft-only rules (duplicate prefLabels, unknown status
/// values, foreign inScheme) are reported by [`concept_from_draft`] and the
/// import readers instead.
pub fn validate(state: &SchemeState) -> Vec<Violation> {
    let mut out = Vec::new();
    for c in state.concepts.values() {
        check_concept(c, &mut out);
        for target in c.broader.iter().chain(&c.related) {
            if state.in_namespace(target) && !state.concepts.contains_key(target) {
                out.push(Violation::error(Rule::R3, &c.uri, format!("relation target {target} does not resolve in the scheme")));
            }
        }
        out.extend(mint::validate_uri(c.uri.as_str(), c.numeric_id.is_some(), |_| false));
    }
    for uri in broader_cycle_members(state) {
        out.push(Violation::error(Rule::R4, &uri, "concept lies on a broader cycle"));
    }
    sort_violations(&mut out);
    out
}

/// Like [`validate`], plus registry-wide uniqueness of concept URIs.
pub fn validate_in_registry(state: &SchemeState, is_taken: impl Fn(&Uri) -> bool) -> Vec<Violation> {
    let mut out = validate(state);
    for uri in state.concepts.keys() {
        if is_taken(uri) {
            out.push(Violation::error(Rule::R8, uri, "duplicate URI"));
        }
    }
    sort_violations(&mut out);
    out
}

/// Validation of the state that would result from applying `events`; the
/// given state is not modified.
pub fn validate_batch(state: &SchemeState, events: &[PendingEvent]) -> Result<Vec<Violation>> {
    let mut scratch = state.clone();
    for ev in events {
        apply_pending(&mut scratch, ev)?;
    }
    Ok(validate(&scratch))
}

fn check_concept(c: &Concept, out: &mut Vec<Violation>) {
    for (lang, pref) in &c.pref_labels {
        if c.alt_labels.get(lang).is_some_and(|alts| alts.contains(pref)) {
            out.push(Violation::error(Rule::R2, &c.uri, format!("prefLabel \"{pref}\"@{lang} is also an altLabel")));
        }
    }
    for shared in c.broader.intersection(&c.related) {
        out.push(Violation::error(Rule::R5, &c.uri, format!("{shared} is both broader and related")));
    }
}

/// Concepts on a cycle of in-scheme broader edges (Tarjan's SCC, iterative).
pub fn broader_cycle_members(state: &SchemeState) -> BTreeSet<Uri> {
    let nodes: Vec<&Uri> = state.concepts.keys().collect();
    let index_of: HashMap<&Uri, usize> = nodes.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let adj: Vec<Vec<usize>> = nodes
        .iter()
        .map(|u| state.concepts[*u].broader.iter().filter_map(|b| index_of.get(b).copied()).collect())
        .collect();

    let n = nodes.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut members = BTreeSet::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // (node, next edge position)
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut edge)) = work.last_mut() {
            if *edge == 0 && index[v] == usize::MAX {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*edge) {
                *edge += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                if component.len() > 1 || adj[v].contains(&v) {
                    members.extend(component.into_iter().map(|i| nodes[i].clone()));
                }
            }
        }
    }
    members
}

/// Builds a concept from a draft, reporting what the concept shape cannot
/// hold (R1) and draft-level R2/R5 problems. First value wins on duplicates.
pub fn concept_from_draft(draft: &ConceptDraft, uri: Uri) -> (Concept, Vec<Violation>) {
    let mut c = Concept::blank(uri);
    let mut out = Vec::new();
    for l in &draft.pref_labels {
        if c.pref_labels.contains_key(&l.lang) {
            out.push(Violation::error(Rule::R1, &c.uri, format!("more than one prefLabel in language `{}`", l.lang)));
        } else {
            c.pref_labels.insert(l.lang.clone(), l.text.clone());
        }
    }
    for l in &draft.alt_labels {
        c.alt_labels.entry(l.lang.clone()).or_default().insert(l.text.clone());
    }
    for l in &draft.definitions {
        c.definition.entry(l.lang.clone()).or_insert_with(|| l.text.clone());
    }
    for l in &draft.scope_notes {
        c.scope_note.entry(l.lang.clone()).or_insert_with(|| l.text.clone());
    }
    c.broader.extend(draft.broader.iter().cloned());
    c.related.extend(draft.related.iter().cloned());
    c.notes.extend(draft.notes.iter().cloned());
    check_concept(&c, &mut out);
    sort_violations(&mut out);
    (c, out)
}

/// R6 for raw status text read from a file.
pub fn check_status_text(uri: &Uri, raw: &str) -> std::result::Result<StatusTerm, Violation> {
    raw.parse::<StatusTerm>()
        .map_err(|_| Violation::error(Rule::R6, uri, format!("status `{raw}` is not in the registered status vocabulary")))
}

/// Counts violations by rule, for summaries.
pub fn summarize(v: &[Violation]) -> BTreeMap<Rule, usize> {
    let mut m = BTreeMap::new();
    for x in v {
        *m.entry(x.rule).or_insert(0) += 1;
    }
    m
}
