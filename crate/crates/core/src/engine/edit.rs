use serde::{Deserialize, Serialize};

use super::FieldPath;
use crate::error::{RegistryError, Result};
use crate::model::{Concept, Uri};

/// One requested change to a concept, as submitted by a maintainer. Edits
/// are turned into [`super::ChangeItem`]s by diffing before and after, so a
/// no-op edit produces no item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    /// Single-valued fields: `pref_label(l)`, `definition(l)`, `scope_note(l)`.
    Set { field: FieldPath, value: String },
    Unset { field: FieldPath },
    /// Set-valued fields: `alt_label(l)`, `broader`, `related`, `note`.
    Add { field: FieldPath, value: String },
    Remove { field: FieldPath, value: String },
}

fn not_editable(field: &FieldPath, how: &str) -> RegistryError {
    RegistryError::InvalidInput(format!("field `{field}` cannot be changed with `{how}`"))
}

fn uri(value: &str) -> Result<Uri> {
    Uri::parse(value)
}

/// The concept after `edits`, applied in order to a copy of `before`.
pub fn apply_edits(before: &Concept, edits: &[Edit]) -> Result<Concept> {
    if edits.is_empty() {
        return Err(RegistryError::EmptyEdits);
    }
    let mut c = before.clone();
    for e in edits {
        match e {
            Edit::Set { field, value } => {
                if value.is_empty() {
                    return Err(RegistryError::InvalidInput(format!("empty value for `{field}`")));
                }
                let map = match field {
                    FieldPath::PrefLabel(l) => c.pref_labels.entry(l.clone()),
                    FieldPath::Definition(l) => c.definition.entry(l.clone()),
                    FieldPath::ScopeNote(l) => c.scope_note.entry(l.clone()),
                    _ => return Err(not_editable(field, "set")),
                };
                *map.or_default() = value.clone();
            }
            Edit::Unset { field } => match field {
                FieldPath::PrefLabel(l) => {
                    c.pref_labels.remove(l);
                }
                FieldPath::Definition(l) => {
                    c.definition.remove(l);
                }
                FieldPath::ScopeNote(l) => {
                    c.scope_note.remove(l);
                }
                FieldPath::AltLabel(l) => {
                    c.alt_labels.remove(l);
                }
                _ => return Err(not_editable(field, "unset")),
            },
            Edit::Add { field, value } => {
                if value.is_empty() {
                    return Err(RegistryError::InvalidInput(format!("empty value for `{field}`")));
                }
                match field {
                    FieldPath::AltLabel(l) => {
                        c.alt_labels.entry(l.clone()).or_default().insert(value.clone());
                    }
                    FieldPath::Broader => {
                        c.broader.insert(uri(value)?);
                    }
                    FieldPath::Related => {
                        c.related.insert(uri(value)?);
                    }
                    FieldPath::Note => {
                        c.notes.insert(value.clone());
                    }
                    _ => return Err(not_editable(field, "add")),
                }
            }
            Edit::Remove { field, value } => match field {
                FieldPath::AltLabel(l) => {
                    if let Some(set) = c.alt_labels.get_mut(l) {
                        set.remove(value);
                        if set.is_empty() {
                            c.alt_labels.remove(l);
                        }
                    }
                }
                FieldPath::Broader => {
                    c.broader.remove(&uri(value)?);
                }
                FieldPath::Related => {
                    c.related.remove(&uri(value)?);
                }
                FieldPath::Note => {
                    c.notes.remove(value);
                }
                _ => return Err(not_editable(field, "remove")),
            },
        }
    }
    Ok(c)
}
