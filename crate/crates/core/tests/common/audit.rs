//! Field-by-field comparison of a scheme with what its CSV export carries.

use std::collections::{BTreeMap, BTreeSet};

use vocab_registry::kos::{csv, LossReport};
use vocab_registry::model::{Concept, SchemeState, Uri};

use super::gen::fields;

/// Checks `losses` against the fields actually missing when `text` is read
/// back. Returns the number of dropped fields.
pub fn csv_losses(s: &SchemeState, text: &str, losses: &LossReport) -> Result<usize, String> {
    let rows = csv::parse_csv(text.as_bytes()).map_err(|e| e.to_string())?.rows;
    let ids = csv::numeric_ids(&rows, s.uri.as_str());
    let back: BTreeMap<Uri, Concept> = rows
        .iter()
        .map(|row| {
            let u = row.uri.clone().expect("exported rows carry URIs");
            let mut c = row.to_concept(u.clone());
            c.numeric_id = ids.get(&u).copied();
            (u, c)
        })
        .collect();
    if !back.keys().eq(s.concepts.keys()) {
        return Err("CSV rows do not list exactly the scheme's concepts".into());
    }
    let mut dropped = BTreeSet::new();
    for (u, c) in &s.concepts {
        let (had, kept) = (fields(c), fields(&back[u]));
        for (f, v) in &had {
            if !kept.contains(&(f.clone(), v.clone())) {
                dropped.insert((u.to_string(), f.clone()));
            }
        }
        // Nothing may appear that was not there, except a numeric id read
        // back from a `{scheme}/{n}` URI.
        let tail = u.as_str().rsplit('/').next().unwrap_or_default();
        if let Some(g) = kept.difference(&had).find(|(f, v)| !(f == "numeric_id" && v == tail)) {
            return Err(format!("{u}: CSV invented {g:?}"));
        }
    }
    if !s.extras.is_empty() {
        dropped.insert((s.uri.to_string(), "extra".into()));
    }
    let reported: BTreeSet<(String, String)> = losses.entries.iter().map(|e| (e.concept.to_string(), e.field_path.clone())).collect();
    if reported.len() != losses.entries.len() {
        return Err("duplicate loss entries".into());
    }
    if reported != dropped {
        let missing: Vec<_> = dropped.difference(&reported).collect();
        let extra: Vec<_> = reported.difference(&dropped).collect();
        return Err(format!("unreported drops {missing:?}, spurious entries {extra:?}"));
    }
    Ok(dropped.len())
}
