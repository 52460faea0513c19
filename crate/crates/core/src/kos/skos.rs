//! Mapping between triples and scheme state.
//!
//! Recognized statements populate concept fields; anything else about a known
//! subject is preserved in `extras`, so export of an imported file loses
//! nothing.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{RegistryError, Result};
use crate::model::{Concept, SchemeState, Uri};
use crate::rdf::{dc, skos, Object, Triple, RDF_TYPE, REG_DEFAULT};
use crate::validation::{self, Rule, Violation};

use super::ntriples::serialize_ntriples;

/// Predicate IRIs, with the registry namespace configurable.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    rdf_type: Uri,
    concept_scheme: Uri,
    concept: Uri,
    pref_label: Uri,
    alt_label: Uri,
    definition: Uri,
    scope_note: Uri,
    note: Uri,
    broader: Uri,
    related: Uri,
    in_scheme: Uri,
    title: Uri,
    description: Uri,
    status: Uri,
    replaces: Uri,
    replaced_by: Uri,
    numeric_id: Uri,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::with_registry_namespace(REG_DEFAULT)
    }
}

impl Vocabulary {
    pub fn with_registry_namespace(reg: &str) -> Self {
        let u = |s: String| Uri::parse(&s).expect("vocabulary IRIs are absolute");
        Vocabulary {
            rdf_type: u(RDF_TYPE.to_string()),
            concept_scheme: u(skos("ConceptScheme")),
            concept: u(skos("Concept")),
            pref_label: u(skos("prefLabel")),
            alt_label: u(skos("altLabel")),
            definition: u(skos("definition")),
            scope_note: u(skos("scopeNote")),
            note: u(skos("note")),
            broader: u(skos("broader")),
            related: u(skos("related")),
            in_scheme: u(skos("inScheme")),
            title: u(dc("title")),
            description: u(dc("description")),
            status: u(format!("{reg}status")),
            replaces: u(format!("{reg}replaces")),
            replaced_by: u(format!("{reg}replacedBy")),
            numeric_id: u(format!("{reg}numericId")),
        }
    }
}

/// A scheme read from a file, with the problems that the state itself cannot
/// carry (duplicate prefLabels, unknown status values, foreign inScheme).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeDraft {
    pub state: SchemeState,
    pub issues: Vec<Violation>,
}

impl SchemeDraft {
    /// Draft issues plus everything [`validation::validate`] finds.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = self.issues.clone();
        v.extend(validation::validate(&self.state));
        validation::sort_violations(&mut v);
        v
    }
}

fn plain_literal(o: &Object) -> Option<&str> {
    match o {
        Object::Literal { value, lang: None } => Some(value),
        _ => None,
    }
}

fn lang_literal(o: &Object) -> Option<(&str, &str)> {
    match o {
        Object::Literal { value, lang } => Some((lang.as_deref().unwrap_or(""), value)),
        _ => None,
    }
}

/// Reads a scheme out of a triple set. Warnings name triples whose subject is
/// neither the scheme nor a concept; those triples are dropped.
pub fn triples_to_scheme(triples: &BTreeSet<Triple>, vocab: &Vocabulary) -> Result<(SchemeDraft, Vec<String>)> {
    let typed = |class: &Uri| -> BTreeSet<&Uri> {
        triples
            .iter()
            .filter(|t| t.predicate == vocab.rdf_type && t.object.as_iri() == Some(class))
            .map(|t| &t.subject)
            .collect()
    };
    let schemes = typed(&vocab.concept_scheme);
    let scheme_uri = match schemes.len() {
        0 => return Err(RegistryError::NoScheme),
        1 => (*schemes.iter().next().unwrap()).clone(),
        _ => return Err(RegistryError::MultipleSchemes),
    };
    let concept_uris: BTreeSet<Uri> = typed(&vocab.concept).into_iter().filter(|u| **u != scheme_uri).cloned().collect();

    let mut state = SchemeState::new(scheme_uri.clone(), "", "");
    let mut concepts: BTreeMap<Uri, Concept> = concept_uris.iter().map(|u| (u.clone(), Concept::blank(u.clone()))).collect();
    let mut issues = Vec::new();
    let mut warnings = Vec::new();
    let mut seen_title = false;
    let mut seen_description = false;
    let mut seen_status: BTreeSet<Uri> = BTreeSet::new();

    for t in triples {
        if t.subject == scheme_uri {
            let p = &t.predicate;
            if *p == vocab.rdf_type && t.object.as_iri() == Some(&vocab.concept_scheme) {
                continue;
            }
            if *p == vocab.title && !seen_title {
                if let Some(v) = plain_literal(&t.object) {
                    state.title = v.to_string();
                    seen_title = true;
                    continue;
                }
            }
            if *p == vocab.description && !seen_description {
                if let Some(v) = plain_literal(&t.object) {
                    state.description = v.to_string();
                    seen_description = true;
                    continue;
                }
            }
            state.extras.insert(t.clone());
            continue;
        }
        let Some(c) = concepts.get_mut(&t.subject) else {
            warnings.push(format!("ignoring triple about unknown subject: {t}"));
            continue;
        };
        if !read_concept_triple(c, t, vocab, &scheme_uri, &mut issues, &mut seen_status) {
            c.extras.insert(t.clone());
        }
    }
    state.concepts = concepts;
    validation::sort_violations(&mut issues);
    Ok((SchemeDraft { state, issues }, warnings))
}

/// Returns false when the triple is not a recognized statement and belongs in extras.
fn read_concept_triple(
    c: &mut Concept,
    t: &Triple,
    v: &Vocabulary,
    scheme: &Uri,
    issues: &mut Vec<Violation>,
    seen_status: &mut BTreeSet<Uri>,
) -> bool {
    let p = &t.predicate;
    let o = &t.object;
    if *p == v.rdf_type {
        return o.as_iri() == Some(&v.concept);
    }
    if *p == v.pref_label {
        let Some((lang, text)) = lang_literal(o) else { return false };
        if c.pref_labels.contains_key(lang) {
            issues.push(Violation::error(Rule::R1, &c.uri, format!("more than one prefLabel in language `{lang}`")));
        } else {
            c.pref_labels.insert(lang.to_string(), text.to_string());
        }
        return true;
    }
    if *p == v.alt_label {
        let Some((lang, text)) = lang_literal(o) else { return false };
        c.alt_labels.entry(lang.to_string()).or_default().insert(text.to_string());
        return true;
    }
    if *p == v.definition || *p == v.scope_note {
        let Some((lang, text)) = lang_literal(o) else { return false };
        let map = if *p == v.definition { &mut c.definition } else { &mut c.scope_note };
        if map.contains_key(lang) {
            return false;
        }
        map.insert(lang.to_string(), text.to_string());
        return true;
    }
    if *p == v.note {
        let Some(text) = plain_literal(o) else { return false };
        c.notes.insert(text.to_string());
        return true;
    }
    let set = if *p == v.broader {
        Some(&mut c.broader)
    } else if *p == v.related {
        Some(&mut c.related)
    } else if *p == v.replaces {
        Some(&mut c.replaces)
    } else if *p == v.replaced_by {
        Some(&mut c.replaced_by)
    } else {
        None
    };
    if let Some(set) = set {
        let Some(target) = o.as_iri() else { return false };
        set.insert(target.clone());
        return true;
    }
    if *p == v.in_scheme {
        let Some(target) = o.as_iri() else { return false };
        if target != scheme {
            issues.push(Violation::error(Rule::R7, &c.uri, format!("inScheme {target} is not the containing scheme {scheme}")));
        }
        return true;
    }
    if *p == v.status {
        if seen_status.contains(&c.uri) {
            return false;
        }
        let Some(raw) = plain_literal(o) else { return false };
        seen_status.insert(c.uri.clone());
        match validation::check_status_text(&c.uri, raw) {
            Ok(s) => c.status = s,
            Err(violation) => issues.push(violation),
        }
        return true;
    }
    if *p == v.numeric_id && c.numeric_id.is_none() {
        let Some(n) = plain_literal(o).and_then(|s| s.parse::<u64>().ok()).filter(|n| n.to_string() == plain_literal(o).unwrap_or_default()) else {
            return false;
        };
        c.numeric_id = Some(n);
        return true;
    }
    false
}

pub fn scheme_triples(state: &SchemeState, v: &Vocabulary) -> BTreeSet<Triple> {
    let mut out = BTreeSet::new();
    let s = &state.uri;
    let add = |out: &mut BTreeSet<Triple>, subj: &Uri, pred: &Uri, obj: Object| {
        out.insert(Triple::new(subj.clone(), pred.clone(), obj));
    };
    add(&mut out, s, &v.rdf_type, Object::iri(v.concept_scheme.clone()));
    if !state.title.is_empty() {
        add(&mut out, s, &v.title, Object::literal(&state.title, None));
    }
    if !state.description.is_empty() {
        add(&mut out, s, &v.description, Object::literal(&state.description, None));
    }
    out.extend(state.extras.iter().cloned());

    for c in state.concepts.values() {
        let u = &c.uri;
        add(&mut out, u, &v.rdf_type, Object::iri(v.concept.clone()));
        add(&mut out, u, &v.in_scheme, Object::iri(s.clone()));
        for (lang, text) in &c.pref_labels {
            add(&mut out, u, &v.pref_label, Object::literal(text, Some(lang)));
        }
        for (lang, set) in &c.alt_labels {
            for text in set {
                add(&mut out, u, &v.alt_label, Object::literal(text, Some(lang)));
            }
        }
        for (lang, text) in &c.definition {
            add(&mut out, u, &v.definition, Object::literal(text, Some(lang)));
        }
        for (lang, text) in &c.scope_note {
            add(&mut out, u, &v.scope_note, Object::literal(text, Some(lang)));
        }
        for text in &c.notes {
            add(&mut out, u, &v.note, Object::literal(text, None));
        }
        for (pred, set) in [(&v.broader, &c.broader), (&v.related, &c.related), (&v.replaces, &c.replaces), (&v.replaced_by, &c.replaced_by)] {
            for target in set {
                add(&mut out, u, pred, Object::iri(target.clone()));
            }
        }
        add(&mut out, u, &v.status, Object::literal(c.status.as_str(), None));
        if let Some(n) = c.numeric_id {
            add(&mut out, u, &v.numeric_id, Object::literal(n.to_string(), None));
        }
        out.extend(c.extras.iter().cloned());
    }
    out
}

/// Canonical triple serialization of a scheme state.
pub fn scheme_to_triples(state: &SchemeState, v: &Vocabulary) -> String {
    serialize_ntriples(&scheme_triples(state, v))
}
