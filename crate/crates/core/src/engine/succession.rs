use std::collections::BTreeSet;

use crate::error::{RegistryError, Result};
use crate::model::{SchemeState, Uri};

/// Structural check for deprecate-and-mint commits (semantic updates, splits,
/// merges): every predecessor was live and is now deprecated with
/// `replaced_by` equal to the successors; every successor is new and has
/// `replaces` equal to the predecessors.
pub fn check_succession(before: &SchemeState, after: &SchemeState, olds: &[Uri], news: &[Uri]) -> Result<()> {
    let fail = |msg: String| Err(RegistryError::SuccessionInvalid(msg));
    let old_set: BTreeSet<Uri> = olds.iter().cloned().collect();
    let new_set: BTreeSet<Uri> = news.iter().cloned().collect();
    if old_set.is_empty() || new_set.is_empty() {
        return fail("succession needs predecessors and successors".into());
    }
    if old_set.len() != olds.len() || new_set.len() != news.len() {
        return fail("duplicate URIs in succession".into());
    }
    if !old_set.is_disjoint(&new_set) {
        return fail("a concept cannot succeed itself".into());
    }
    for old in olds {
        let Some(prev) = before.concepts.get(old) else {
            return fail(format!("predecessor {old} did not exist"));
        };
        if prev.is_deprecated() {
            return fail(format!("predecessor {old} was already deprecated"));
        }
        let Some(now) = after.concepts.get(old) else {
            return fail(format!("predecessor {old} disappeared"));
        };
        if !now.is_deprecated() {
            return fail(format!("predecessor {old} is not deprecated"));
        }
        let added: BTreeSet<Uri> = now.replaced_by.difference(&prev.replaced_by).cloned().collect();
        if added != new_set || !prev.replaced_by.is_empty() {
            return fail(format!("predecessor {old} replaced_by does not list exactly the successors"));
        }
    }
    for new in news {
        if before.concepts.contains_key(new) {
            return fail(format!("successor {new} already existed"));
        }
        let Some(now) = after.concepts.get(new) else {
            return fail(format!("successor {new} was not created"));
        };
        if now.replaces != old_set {
            return fail(format!("successor {new} replaces does not list exactly the predecessors"));
        }
        if now.is_deprecated() {
            return fail(format!("successor {new} is deprecated"));
        }
    }
    Ok(())
}
