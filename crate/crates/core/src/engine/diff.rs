use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ChangeItem, ChangeOp, FieldPath};
use crate::error::{RegistryError, Result};
use crate::kos::ntriples;
use crate::model::{Concept, SchemeState, StatusTerm, Uri};

/// Minimal field-level item list turning `before` into `after`, in
/// deterministic order (field path, then old, then new).
pub fn diff_concepts(before: &Concept, after: &Concept) -> Result<Vec<ChangeItem>> {
    if before.uri != after.uri {
        return Err(RegistryError::UriMismatch(before.uri.clone(), after.uri.clone()));
    }
    let uri = &before.uri;
    let mut items = Vec::new();

    single_map(&mut items, uri, &before.pref_labels, &after.pref_labels, FieldPath::PrefLabel);
    single_map(&mut items, uri, &before.definition, &after.definition, FieldPath::Definition);
    single_map(&mut items, uri, &before.scope_note, &after.scope_note, FieldPath::ScopeNote);

    let langs: BTreeSet<&String> = before.alt_labels.keys().chain(after.alt_labels.keys()).collect();
    let empty = BTreeSet::new();
    for lang in langs {
        let b = before.alt_labels.get(lang).unwrap_or(&empty);
        let a = after.alt_labels.get(lang).unwrap_or(&empty);
        set_diff(&mut items, uri, b, a, || FieldPath::AltLabel(lang.clone()), |s| s.clone());
    }

    set_diff(&mut items, uri, &before.broader, &after.broader, || FieldPath::Broader, |u| u.to_string());
    set_diff(&mut items, uri, &before.related, &after.related, || FieldPath::Related, |u| u.to_string());
    set_diff(&mut items, uri, &before.replaces, &after.replaces, || FieldPath::Replaces, |u| u.to_string());
    set_diff(&mut items, uri, &before.replaced_by, &after.replaced_by, || FieldPath::ReplacedBy, |u| u.to_string());
    set_diff(&mut items, uri, &before.notes, &after.notes, || FieldPath::Note, |s| s.clone());
    set_diff(&mut items, uri, &before.extras, &after.extras, || FieldPath::Extra, |t| t.to_string());

    if before.status != after.status {
        items.push(ChangeItem::modify(uri, FieldPath::Status, before.status.as_str(), after.status.as_str()));
    }
    match (before.numeric_id, after.numeric_id) {
        (None, Some(n)) => items.push(ChangeItem::add(uri, FieldPath::NumericId, n.to_string())),
        (Some(o), None) => items.push(ChangeItem::remove(uri, FieldPath::NumericId, o.to_string())),
        (Some(o), Some(n)) if o != n => {
            items.push(ChangeItem::modify(uri, FieldPath::NumericId, o.to_string(), n.to_string()))
        }
        _ => {}
    }

    sort_items(&mut items);
    Ok(items)
}

pub(crate) fn sort_items(items: &mut [ChangeItem]) {
    items.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

fn single_map(
    items: &mut Vec<ChangeItem>,
    uri: &Uri,
    before: &BTreeMap<String, String>,
    after: &BTreeMap<String, String>,
    path: impl Fn(String) -> FieldPath,
) {
    let langs: BTreeSet<&String> = before.keys().chain(after.keys()).collect();
    for lang in langs {
        match (before.get(lang), after.get(lang)) {
            (None, Some(n)) => items.push(ChangeItem::add(uri, path(lang.clone()), n.clone())),
            (Some(o), None) => items.push(ChangeItem::remove(uri, path(lang.clone()), o.clone())),
            (Some(o), Some(n)) if o != n => items.push(ChangeItem::modify(uri, path(lang.clone()), o.clone(), n.clone())),
            _ => {}
        }
    }
}

fn set_diff<T: Ord>(
    items: &mut Vec<ChangeItem>,
    uri: &Uri,
    before: &BTreeSet<T>,
    after: &BTreeSet<T>,
    path: impl Fn() -> FieldPath,
    render: impl Fn(&T) -> String,
) {
    for gone in before.difference(after) {
        items.push(ChangeItem::remove(uri, path(), render(gone)));
    }
    for new in after.difference(before) {
        items.push(ChangeItem::add(uri, path(), render(new)));
    }
}

/// Applies items to `concept` strictly: every item must match the current
/// value it claims to replace. Items for other concepts are an error.
pub fn apply_items(concept: &mut Concept, items: &[ChangeItem]) -> std::result::Result<(), String> {
    for item in items {
        if item.concept != concept.uri {
            return Err(format!("item for `{}` applied to `{}`", item.concept, concept.uri));
        }
        if !item.is_well_formed() {
            return Err(format!("malformed {} item on {}", item.op.as_str(), item.field));
        }
        apply_one(concept, item)?;
    }
    Ok(())
}

fn apply_one(c: &mut Concept, item: &ChangeItem) -> std::result::Result<(), String> {
    let old = item.old.as_deref();
    let new = item.new.as_deref();
    let mismatch = || format!("{} {} does not match current value on {}", item.field, item.op.as_str(), c.uri);
    match &item.field {
        FieldPath::PrefLabel(lang) => apply_single(&mut c.pref_labels, lang, old, new).map_err(|_| mismatch()),
        FieldPath::Definition(lang) => apply_single(&mut c.definition, lang, old, new).map_err(|_| mismatch()),
        FieldPath::ScopeNote(lang) => apply_single(&mut c.scope_note, lang, old, new).map_err(|_| mismatch()),
        FieldPath::AltLabel(lang) => {
            let set = c.alt_labels.entry(lang.clone()).or_default();
            let r = apply_set(set, old.map(str::to_string), new.map(str::to_string));
            if set.is_empty() {
                c.alt_labels.remove(lang);
            }
            r.map_err(|_| mismatch())
        }
        FieldPath::Broader => apply_set(&mut c.broader, parse_uri(old)?, parse_uri(new)?).map_err(|_| mismatch()),
        FieldPath::Related => apply_set(&mut c.related, parse_uri(old)?, parse_uri(new)?).map_err(|_| mismatch()),
        FieldPath::Replaces => apply_set(&mut c.replaces, parse_uri(old)?, parse_uri(new)?).map_err(|_| mismatch()),
        FieldPath::ReplacedBy => {
            apply_set(&mut c.replaced_by, parse_uri(old)?, parse_uri(new)?).map_err(|_| mismatch())
        }
        FieldPath::Note => apply_set(&mut c.notes, old.map(str::to_string), new.map(str::to_string)).map_err(|_| mismatch()),
        FieldPath::Extra => {
            let parse = |s: Option<&str>| -> std::result::Result<_, String> {
                s.map(ntriples::parse_triple_line).transpose()
            };
            apply_set(&mut c.extras, parse(old)?, parse(new)?).map_err(|_| mismatch())
        }
        FieldPath::Status => {
            if item.op != ChangeOp::Modify {
                return Err("status can only be modified".into());
            }
            let from: StatusTerm = old.unwrap_or_default().parse().map_err(|e| format!("{e}"))?;
            let to: StatusTerm = new.unwrap_or_default().parse().map_err(|e| format!("{e}"))?;
            if c.status != from {
                return Err(mismatch());
            }
            c.status = to;
            Ok(())
        }
        FieldPath::NumericId => {
            let parse = |s: Option<&str>| -> std::result::Result<Option<u64>, String> {
                s.map(|v| v.parse::<u64>().map_err(|e| e.to_string())).transpose()
            };
            let (o, n) = (parse(old)?, parse(new)?);
            if c.numeric_id != o {
                return Err(mismatch());
            }
            c.numeric_id = n;
            Ok(())
        }
    }
}

fn parse_uri(s: Option<&str>) -> std::result::Result<Option<Uri>, String> {
    s.map(|v| Uri::parse(v).map_err(|e| e.to_string())).transpose()
}

fn apply_single(map: &mut BTreeMap<String, String>, key: &str, old: Option<&str>, new: Option<&str>) -> std::result::Result<(), ()> {
    if map.get(key).map(String::as_str) != old {
        return Err(());
    }
    match new {
        Some(v) => map.insert(key.to_string(), v.to_string()),
        None => map.remove(key),
    };
    Ok(())
}

fn apply_set<T: Ord>(set: &mut BTreeSet<T>, old: Option<T>, new: Option<T>) -> std::result::Result<(), ()> {
    if let Some(o) = old {
        if !set.remove(&o) {
            return Err(());
        }
    }
    if let Some(n) = new {
        if !set.insert(n) {
            return Err(());
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataChange {
    pub field: String,
    pub op: ChangeOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new: Option<String>,
}

/// Aggregate difference between two states of one scheme.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeDiff {
    pub created: BTreeSet<Uri>,
    pub deprecated: BTreeSet<Uri>,
    /// Only non-hosted copies can lose concepts.
    pub removed: BTreeSet<Uri>,
    /// Per-concept items in URI order; created concepts diff from a blank concept.
    pub items: Vec<ChangeItem>,
    pub metadata: Vec<MetadataChange>,
}

impl SchemeDiff {
    pub fn is_empty(&self) -> bool {
        self.created.is_empty()
            && self.deprecated.is_empty()
            && self.removed.is_empty()
            && self.items.is_empty()
            && self.metadata.is_empty()
    }

    pub fn items_for(&self, uri: &Uri) -> impl Iterator<Item = &ChangeItem> {
        let uri = uri.clone();
        self.items.iter().filter(move |i| i.concept == uri)
    }
}

pub fn diff_states(before: &SchemeState, after: &SchemeState) -> SchemeDiff {
    let mut out = SchemeDiff::default();
    let uris: BTreeSet<&Uri> = before.concepts.keys().chain(after.concepts.keys()).collect();
    for uri in uris {
        let b = before.concepts.get(uri);
        let a = after.concepts.get(uri);
        let blank = Concept::blank(uri.clone());
        let items = match (b, a) {
            (Some(b), Some(a)) => diff_concepts(b, a),
            (None, Some(a)) => {
                out.created.insert(uri.clone());
                diff_concepts(&blank, a)
            }
            (Some(b), None) => {
                out.removed.insert(uri.clone());
                diff_concepts(b, &blank)
            }
            (None, None) => unreachable!(),
        }
        .expect("same URI on both sides");
        if a.is_some_and(Concept::is_deprecated) && !b.is_some_and(Concept::is_deprecated) {
            out.deprecated.insert(uri.clone());
        }
        out.items.extend(items);
    }

    for (field, o, n) in [("title", &before.title, &after.title), ("description", &before.description, &after.description)] {
        if o != n {
            out.metadata.push(MetadataChange { field: field.into(), op: ChangeOp::Modify, old: Some(o.clone()), new: Some(n.clone()) });
        }
    }
    if before.uri != after.uri {
        out.metadata.push(MetadataChange {
            field: "uri".into(),
            op: ChangeOp::Modify,
            old: Some(before.uri.to_string()),
            new: Some(after.uri.to_string()),
        });
    }
    for gone in before.extras.difference(&after.extras) {
        out.metadata.push(MetadataChange { field: "extra".into(), op: ChangeOp::Remove, old: Some(gone.to_string()), new: None });
    }
    for added in after.extras.difference(&before.extras) {
        out.metadata.push(MetadataChange { field: "extra".into(), op: ChangeOp::Add, old: None, new: Some(added.to_string()) });
    }
    out
}
