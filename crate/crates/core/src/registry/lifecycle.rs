use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Ctx, Registry, Role};
use crate::directory::JournalEntry;
use crate::engine::{
    apply_edits, apply_pending, check_succession, classify, diff_concepts, ChangeItem, Classification, Edit, EventKind,
    FieldPath, MaintainerAssertion, Outcome, PendingEvent, RuleCode, SchemeChange,
};
use crate::error::{RegistryError, Result};
use crate::model::{AgentId, Concept, ConceptDraft, SchemeMeta, StatusTerm, Uri};
use crate::notify::{Answer, ConfirmationTicket, PendingChange};
use crate::validation::{self, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateRequest {
    pub edits: Vec<Edit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assertion: Option<MaintainerAssertion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_version: Option<u64>,
    /// Successor URI for schemes whose owners provide URIs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub successor_uri: Option<Uri>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum UpdateOutcome {
    Updated {
        version: u64,
        uri: Uri,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        classification: Option<Classification>,
    },
    SuccessorMinted {
        version: u64,
        deprecated: Uri,
        uri: Uri,
        classification: Classification,
    },
    PendingConfirmation {
        ticket: String,
        question: String,
        expires_at: DateTime<Utc>,
        classification: Classification,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preview {
    pub uri: Uri,
    pub items: Vec<ChangeItem>,
    /// Absent when the edits change nothing.
    pub classification: Option<Classification>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "resolution", rename_all = "snake_case")]
pub enum Resolution {
    Applied { outcome: UpdateOutcome },
    Discarded { version: u64 },
}

fn live<'a>(ctx: &'a Ctx<'_>, uri: &Uri) -> Result<&'a Concept> {
    let c = ctx.head.state.concepts.get(uri).ok_or_else(|| RegistryError::UnknownConcept(uri.to_string()))?;
    if c.is_deprecated() {
        return Err(RegistryError::AlreadyDeprecated(uri.clone()));
    }
    Ok(c)
}

fn creation_items(c: &Concept) -> Vec<ChangeItem> {
    diff_concepts(&Concept::blank(c.uri.clone()), c).expect("same URI")
}

fn deprecation_items(old: &Concept, successors: &[Uri]) -> Vec<ChangeItem> {
    let mut items = vec![ChangeItem::modify(&old.uri, FieldPath::Status, old.status.as_str(), StatusTerm::Deprecated.as_str())];
    for s in successors {
        items.push(ChangeItem::add(&old.uri, FieldPath::ReplacedBy, s.as_str()));
    }
    items
}

/// Mints a URI and builds a concept from a draft, failing on draft errors.
fn new_concept(ctx: &mut Ctx<'_>, draft: &ConceptDraft) -> Result<Concept> {
    if draft.pref_labels.is_empty() {
        return Err(RegistryError::InvalidInput("a concept needs at least one prefLabel".into()));
    }
    let minted = ctx.minter.mint(draft.uri.as_ref(), draft.label_hint())?;
    let (mut c, violations) = validation::concept_from_draft(draft, minted.uri);
    let errors: Vec<Violation> = violations.into_iter().filter(Violation::is_error).collect();
    if !errors.is_empty() {
        return Err(RegistryError::ValidationFailed(errors));
    }
    c.numeric_id = minted.numeric_id;
    Ok(c)
}

/// Successor of `before` carrying `after`'s content under a new URI.
fn successor(ctx: &mut Ctx<'_>, before: &Concept, after: &Concept, provided: Option<&Uri>) -> Result<Concept> {
    let minted = ctx.minter.mint(provided, after.display_label())?;
    let mut c = after.clone();
    c.uri = minted.uri.clone();
    c.numeric_id = minted.numeric_id;
    c.status = StatusTerm::Proposed;
    c.replaced_by.clear();
    c.replaces = [before.uri.clone()].into();
    c.extras = after
        .extras
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.subject = minted.uri.clone();
            t
        })
        .collect();
    Ok(c)
}

/// Deprecate-and-mint batch, checked for the exact succession structure.
fn succession_batch(
    ctx: &Ctx<'_>,
    kind: EventKind,
    olds: &[&Concept],
    news: &[Concept],
    classification: Classification,
) -> Result<Vec<PendingEvent>> {
    let new_uris: Vec<Uri> = news.iter().map(|c| c.uri.clone()).collect();
    let old_uris: Vec<Uri> = olds.iter().map(|c| c.uri.clone()).collect();
    let mut dep_items = Vec::new();
    for o in olds {
        dep_items.extend(deprecation_items(o, &new_uris));
    }
    let batch = match kind {
        EventKind::ConceptUpdated => {
            let mut dep = PendingEvent::new(EventKind::ConceptDeprecated, old_uris.clone(), dep_items);
            dep.classification = Some(classification);
            let created: Vec<PendingEvent> = news
                .iter()
                .map(|n| PendingEvent::new(EventKind::ConceptCreated, vec![n.uri.clone()], creation_items(n)))
                .collect();
            std::iter::once(dep).chain(created).collect()
        }
        _ => {
            let mut items = dep_items;
            for n in news {
                items.extend(creation_items(n));
            }
            let uris = old_uris.iter().chain(&new_uris).cloned().collect();
            vec![PendingEvent::new(kind, uris, items).with_classification(classification)]
        }
    };
    let mut scratch = ctx.head.state.clone();
    for ev in &batch {
        apply_pending(&mut scratch, ev)?;
    }
    check_succession(&ctx.head.state, &scratch, &old_uris, &new_uris)?;
    Ok(batch)
}

impl Registry {
    pub fn designate_maintainer(&self, token: &str, agent: &AgentId, actor: &AgentId) -> Result<SchemeMeta> {
        self.require_agent(agent)?;
        self.commit_with(token, actor, None, Role::Owner, |ctx| {
            if ctx.head.meta.is_maintainer(agent) {
                return Ok((Vec::new(), ()));
            }
            let mut ev = PendingEvent::new(EventKind::SchemeMetadataUpdated, Vec::new(), Vec::new());
            ev.scheme_change = Some(SchemeChange::MaintainerAdded { agent: agent.clone() });
            Ok((vec![ev], ()))
        })?;
        self.scheme_meta(token)
    }

    pub fn add_concept(&self, token: &str, draft: &ConceptDraft, author: &AgentId, expected: Option<u64>) -> Result<(Concept, u64)> {
        let (c, concept) = self.commit_with(token, author, expected, Role::Maintainer, |ctx| {
            let c = new_concept(ctx, draft)?;
            let ev = PendingEvent::new(EventKind::ConceptCreated, vec![c.uri.clone()], creation_items(&c));
            Ok((vec![ev], c))
        })?;
        Ok((concept, c.version))
    }

    /// Diffs and classifies `edits` without committing.
    pub fn preview(&self, token: &str, uri: &Uri, edits: &[Edit], assertion: Option<MaintainerAssertion>) -> Result<Preview> {
        let head = self.head_state(token)?;
        let before = head.state.concepts.get(uri).ok_or_else(|| RegistryError::UnknownConcept(uri.to_string()))?;
        if before.is_deprecated() {
            return Err(RegistryError::Deprecated(uri.clone()));
        }
        let after = apply_edits(before, edits)?;
        let items = diff_concepts(before, &after)?;
        let classification = if items.is_empty() { None } else { Some(classify(&items, before, assertion)?) };
        Ok(Preview { uri: uri.clone(), items, classification })
    }

    pub fn update_concept(&self, token: &str, uri: &Uri, req: &UpdateRequest, author: &AgentId) -> Result<UpdateOutcome> {
        enum Plan {
            Done(Option<Classification>),
            Successor(Uri, Classification),
            Ask(Classification),
        }
        let (committed, plan) = self.commit_with(token, author, req.expected_version, Role::Maintainer, |ctx| {
            let before = ctx.head.state.concepts.get(uri).ok_or_else(|| RegistryError::UnknownConcept(uri.to_string()))?.clone();
            if before.is_deprecated() {
                return Err(RegistryError::Deprecated(uri.clone()));
            }
            let after = apply_edits(&before, &req.edits)?;
            let items = diff_concepts(&before, &after)?;
            if items.is_empty() {
                return Ok((Vec::new(), Plan::Done(None)));
            }
            let class = classify(&items, &before, req.assertion)?;
            match class.outcome {
                Outcome::NonSemantic => {
                    let ev = PendingEvent::new(EventKind::ConceptUpdated, vec![uri.clone()], items).with_classification(class.clone());
                    Ok((vec![ev], Plan::Done(Some(class))))
                }
                Outcome::NeedsConfirmation => Ok((Vec::new(), Plan::Ask(class))),
                Outcome::Semantic => {
                    let succ = successor(ctx, &before, &after, req.successor_uri.as_ref())?;
                    let new_uri = succ.uri.clone();
                    let batch = succession_batch(ctx, EventKind::ConceptUpdated, &[&before], &[succ], class.clone())?;
                    Ok((batch, Plan::Successor(new_uri, class)))
                }
            }
        })?;
        match plan {
            Plan::Done(classification) => Ok(UpdateOutcome::Updated { version: committed.version, uri: uri.clone(), classification }),
            Plan::Successor(new, classification) => Ok(UpdateOutcome::SuccessorMinted {
                version: committed.version,
                deprecated: uri.clone(),
                uri: new,
                classification,
            }),
            Plan::Ask(classification) => {
                let pending = PendingChange {
                    concept: uri.clone(),
                    edits: req.edits.clone(),
                    base_version: committed.version,
                    author: author.clone(),
                    successor_uri: req.successor_uri.clone(),
                };
                let question = classification.questions.join("\n");
                let ticket = self.issue_confirmation(token, pending, &question, author)?;
                Ok(UpdateOutcome::PendingConfirmation {
                    ticket: ticket.token,
                    question,
                    expires_at: ticket.expires_at,
                    classification,
                })
            }
        }
    }

    pub fn set_status(&self, token: &str, uri: &Uri, status: StatusTerm, author: &AgentId) -> Result<u64> {
        if status == StatusTerm::Deprecated {
            let head = self.head_state(token)?;
            if head.state.concepts.get(uri).is_some_and(Concept::is_deprecated) {
                return Ok(head.meta.head_version);
            }
            return self.deprecate_concept(token, uri, author);
        }
        let (c, _) = self.commit_with(token, author, None, Role::Maintainer, |ctx| {
            let before = ctx.head.state.concepts.get(uri).ok_or_else(|| RegistryError::UnknownConcept(uri.to_string()))?;
            if before.is_deprecated() {
                return Err(RegistryError::DeprecatedIsTerminal(uri.clone()));
            }
            if before.status == status {
                return Ok((Vec::new(), ()));
            }
            let items = vec![ChangeItem::modify(uri, FieldPath::Status, before.status.as_str(), status.as_str())];
            let class = classify(&items, before, None)?;
            Ok((vec![PendingEvent::new(EventKind::ConceptUpdated, vec![uri.clone()], items).with_classification(class)], ()))
        })?;
        Ok(c.version)
    }

    pub fn deprecate_concept(&self, token: &str, uri: &Uri, author: &AgentId) -> Result<u64> {
        let (c, _) = self.commit_with(token, author, None, Role::Maintainer, |ctx| {
            let before = live(ctx, uri)?;
            let ev = PendingEvent::new(EventKind::ConceptDeprecated, vec![uri.clone()], deprecation_items(before, &[]));
            Ok((vec![ev], ()))
        })?;
        Ok(c.version)
    }

    /// Deprecates `uri` in favour of one new concept per draft.
    pub fn split_concept(&self, token: &str, uri: &Uri, drafts: &[ConceptDraft], author: &AgentId, expected: Option<u64>) -> Result<(Vec<Uri>, u64)> {
        if drafts.len() < 2 {
            return Err(RegistryError::TooFewDrafts);
        }
        let (c, news) = self.commit_with(token, author, expected, Role::Maintainer, |ctx| {
            let old = live(ctx, uri)?.clone();
            let mut news = Vec::new();
            for d in drafts {
                let mut n = new_concept(ctx, d)?;
                n.replaces = [old.uri.clone()].into();
                news.push(n);
            }
            let uris: Vec<Uri> = news.iter().map(|n| n.uri.clone()).collect();
            let batch = succession_batch(ctx, EventKind::ConceptSplit, &[&old], &news, Classification::semantic(RuleCode::S1))?;
            Ok((batch, uris))
        })?;
        Ok((news, c.version))
    }

    /// Deprecates every concept in `uris` in favour of one new concept.
    pub fn merge_concepts(&self, token: &str, uris: &[Uri], draft: &ConceptDraft, author: &AgentId, expected: Option<u64>) -> Result<(Uri, u64)> {
        let distinct: BTreeSet<&Uri> = uris.iter().collect();
        if distinct.len() < 2 {
            return Err(RegistryError::TooFewSources);
        }
        let (c, new) = self.commit_with(token, author, expected, Role::Maintainer, |ctx| {
            let olds: Vec<Concept> = distinct.iter().map(|u| live(ctx, u).cloned()).collect::<Result<_>>()?;
            let mut n = new_concept(ctx, draft)?;
            n.replaces = olds.iter().map(|o| o.uri.clone()).collect();
            let new_uri = n.uri.clone();
            let refs: Vec<&Concept> = olds.iter().collect();
            let batch = succession_batch(ctx, EventKind::ConceptMerged, &refs, &[n], Classification::semantic(RuleCode::S1))?;
            Ok((batch, new_uri))
        })?;
        Ok((new, c.version))
    }

    // ----- confirmations -----

    pub fn issue_confirmation(&self, token: &str, pending: PendingChange, question: &str, maintainer: &AgentId) -> Result<ConfirmationTicket> {
        let meta = self.scheme_meta(token)?;
        if !meta.is_maintainer(maintainer) {
            return Err(RegistryError::NotMaintainer(maintainer.to_string()));
        }
        let now = self.now();
        let ticket = ConfirmationTicket {
            token: crate::notify::new_token(),
            scheme: token.to_string(),
            pending,
            question: question.to_string(),
            issued_to: maintainer.clone(),
            issued_at: now,
            expires_at: now + self.cfg.ticket_ttl,
            used: false,
        };
        self.record_ticket(&ticket)?;
        Ok(ticket)
    }

    /// Consumes a ticket. At most one call per token ever succeeds.
    pub fn resolve_confirmation(&self, ticket_token: &str, answer: Answer) -> Result<Resolution> {
        let ticket = {
            let mut dir = self.dir.lock().unwrap();
            let t = dir.state().tickets.get(ticket_token).cloned().ok_or(RegistryError::UnknownToken)?;
            if t.used {
                return Err(RegistryError::TokenUsed);
            }
            let now = self.now();
            if now >= t.expires_at {
                return Err(RegistryError::TokenExpired);
            }
            dir.record(vec![JournalEntry::TicketUsed { token: ticket_token.to_string(), at: now, answer }])?;
            t
        };
        match answer {
            Answer::No => Ok(Resolution::Discarded { version: self.head_version(&ticket.scheme)? }),
            Answer::Yes => {
                let p = &ticket.pending;
                let req = UpdateRequest {
                    edits: p.edits.clone(),
                    assertion: Some(MaintainerAssertion::MeaningChange),
                    expected_version: None,
                    successor_uri: p.successor_uri.clone(),
                };
                let outcome = self.update_concept(&ticket.scheme, &p.concept, &req, &p.author)?;
                Ok(Resolution::Applied { outcome })
            }
        }
    }

    /// Open tickets issued to `agent`.
    pub fn pending_tickets(&self, agent: &AgentId) -> Vec<ConfirmationTicket> {
        let now = self.now();
        self.dir
            .lock()
            .unwrap()
            .state()
            .tickets
            .values()
            .filter(|t| &t.issued_to == agent && !t.used && t.expires_at > now)
            .cloned()
            .collect()
    }
}
