use std::collections::BTreeSet;

use super::{ChangeItem, ChangeOp, Classification, FieldPath, MaintainerAssertion, Outcome, RuleCode};
use crate::error::{RegistryError, Result};
use crate::model::Concept;

/// Maps one item to its rule code. `before` is the concept as it stood
/// before the whole batch.
pub fn rule_for(item: &ChangeItem, before: &Concept, assertion: Option<MaintainerAssertion>) -> RuleCode {
    use MaintainerAssertion::*;
    match (&item.field, item.op) {
        (FieldPath::PrefLabel(_) | FieldPath::AltLabel(_), _) => RuleCode::NS6,
        (FieldPath::Definition(_), ChangeOp::Add) => RuleCode::NS3,
        (FieldPath::Definition(_), _) => match assertion {
            None => RuleCode::NC1,
            Some(Clarification) => RuleCode::NS2,
            Some(MeaningChange) => RuleCode::S2,
        },
        (FieldPath::ScopeNote(_), ChangeOp::Add) => RuleCode::NS3,
        (FieldPath::ScopeNote(_), _) => RuleCode::NS5,
        (FieldPath::Broader, ChangeOp::Add) => RuleCode::NS1,
        // Removing or replacing a broader term relocates the concept.
        (FieldPath::Broader, _) if !before.has_definition() => RuleCode::S3,
        (FieldPath::Broader, _) => match assertion {
            None => RuleCode::NC2,
            Some(Clarification) => RuleCode::NS1,
            Some(MeaningChange) => RuleCode::S3,
        },
        (FieldPath::Related, _) => RuleCode::NS1,
        (FieldPath::Status, _) => RuleCode::NS4,
        (FieldPath::Note | FieldPath::Extra, _) => RuleCode::NS5,
        (FieldPath::Replaces | FieldPath::ReplacedBy | FieldPath::NumericId, _) => RuleCode::S1,
    }
}

fn question(item: &ChangeItem, rule: RuleCode) -> String {
    let uri = &item.concept;
    let consequence = format!(
        "Answer yes to deprecate <{uri}> and mint a successor URI carrying the edit, or no to discard the edit."
    );
    match rule {
        RuleCode::NC2 => {
            let target = item.old.as_deref().or(item.new.as_deref()).unwrap_or("");
            format!(
                "Does the hierarchy change on <{uri}> ({} broader <{target}>) change the meaning of the concept? {consequence}",
                item.op.as_str()
            )
        }
        _ => format!(
            "Does the {} of the {} on <{uri}> change the meaning of the concept? {consequence}",
            match item.op {
                ChangeOp::Remove => "removal",
                _ => "edit",
            },
            item.field
        ),
    }
}

/// Classifies a non-empty batch of items: any S-rule makes it Semantic, else
/// any NC-rule makes it NeedsConfirmation, else NonSemantic.
pub fn classify(items: &[ChangeItem], before: &Concept, assertion: Option<MaintainerAssertion>) -> Result<Classification> {
    if items.is_empty() {
        return Err(RegistryError::EmptyItems);
    }
    let mut reasons = BTreeSet::new();
    let mut questions: Vec<String> = Vec::new();
    for item in items {
        let rule = rule_for(item, before, assertion);
        reasons.insert(rule);
        if rule.needs_confirmation() {
            let q = question(item, rule);
            if !questions.contains(&q) {
                questions.push(q);
            }
        }
    }
    let outcome = if reasons.iter().any(|r| r.is_semantic()) {
        Outcome::Semantic
    } else if reasons.iter().any(|r| r.needs_confirmation()) {
        Outcome::NeedsConfirmation
    } else {
        Outcome::NonSemantic
    };
    if outcome != Outcome::NeedsConfirmation {
        questions.clear();
    }
    Ok(Classification { outcome, reasons, questions })
}
