use std::sync::MutexGuard;

use chrono::{DateTime, Utc};

use super::{Registry, Since};
use crate::copies::SequencedCopy;
use crate::directory::{Delivery, Directory, JournalEntry};
use crate::engine::{render_diff, ChangeEvent, EventKind};
use crate::error::{RegistryError, Result};
use crate::model::{AgentId, SchemeMeta, Uri};
use crate::notify::{
    batch_entry, entry_id, render_atom, Channel, ConfirmationTicket, FeedEntry, Granularity, Link, Notification,
    NotificationKind, OutboxMessage, Scope, Subscription, UsageRegistration,
};

/// A notification before it has an id.
pub(crate) struct NoticeDraft {
    pub recipient: AgentId,
    pub kind: NotificationKind,
    pub subject: String,
    pub body: String,
    pub links: Vec<Link>,
}

fn copy_entry(copy: &SequencedCopy) -> FeedEntry {
    let mut content = render_diff(&copy.diff_from_previous);
    content.push_str(&format!("copy {} is now at sequence {}\n", copy.id, copy.seq));
    FeedEntry {
        id: entry_id(&copy.id, copy.seq),
        title: format!("{} seq {}: snapshot from {}", copy.id, copy.seq, copy.source),
        author: copy.source.clone(),
        updated: copy.retrieved_at,
        content,
    }
}

fn is_semantic_commit(events: &[ChangeEvent], created: &[Uri]) -> bool {
    !created.is_empty()
        || events
            .iter()
            .any(|e| matches!(e.kind, EventKind::ConceptDeprecated | EventKind::ConceptSplit | EventKind::ConceptMerged))
}

impl Registry {
    pub(super) fn send(&self, msg: &OutboxMessage) {
        if let Err(e) = self.sink.deliver(msg) {
            tracing::error!(error = %e, subject = %msg.subject, "message delivery failed");
        }
    }

    /// Assigns ids to `drafts`, journals them after `entries`, and returns
    /// the messages to send once the directory lock is released.
    fn journal_notices(
        &self,
        dir: &mut MutexGuard<'_, Directory>,
        mut entries: Vec<JournalEntry>,
        drafts: Vec<NoticeDraft>,
    ) -> Result<Vec<OutboxMessage>> {
        let now = self.now();
        let first = dir.state().notifications.len();
        let mut messages = Vec::new();
        for (i, d) in drafts.into_iter().enumerate() {
            let to = dir
                .state()
                .agents
                .get(&d.recipient)
                .map(|a| a.contacts.iter().map(|c| c.address.clone()).collect())
                .unwrap_or_default();
            messages.push(OutboxMessage { to, subject: d.subject.clone(), body: d.body.clone(), links: d.links.clone() });
            let notification = Notification {
                id: format!("n{}", first + i + 1),
                recipient: d.recipient,
                kind: d.kind,
                subject: d.subject,
                body: d.body,
                links: d.links,
                created_at: now,
            };
            entries.push(JournalEntry::Notified { notification });
        }
        dir.record(entries)?;
        Ok(messages)
    }

    fn deliver(&self, entries: Vec<JournalEntry>, drafts: Vec<NoticeDraft>) -> Result<()> {
        let messages = {
            let mut dir = self.dir.lock().unwrap();
            self.journal_notices(&mut dir, entries, drafts)?
        };
        for m in &messages {
            self.send(m);
        }
        Ok(())
    }

    /// One delivery per matching subscription that has not yet seen
    /// `(scheme, version)`.
    fn route(&self, scheme: &str, version: u64, semantic: bool, subject: &str, body: &str, links: &[Link], mut drafts: Vec<NoticeDraft>) -> Result<()> {
        let now = self.now();
        let mut entries = Vec::new();
        {
            let dir = self.dir.lock().unwrap();
            for sub in dir.state().subscriptions.values() {
                if !sub.scope.matches(scheme) || (sub.granularity == Granularity::SemanticOnly && !semantic) {
                    continue;
                }
                if dir.state().delivered.contains(&(sub.id.clone(), scheme.to_string(), version)) {
                    continue;
                }
                entries.push(JournalEntry::Delivered {
                    delivery: Delivery { subscription: sub.id.clone(), scheme: scheme.to_string(), version, at: now },
                });
                if sub.channel == Channel::Message {
                    drafts.push(NoticeDraft {
                        recipient: sub.agent.clone(),
                        kind: NotificationKind::Change,
                        subject: subject.to_string(),
                        body: body.to_string(),
                        links: links.to_vec(),
                    });
                }
            }
        }
        self.deliver(entries, drafts)
    }

    /// Routes a committed batch to subscribers and tells scheme contacts
    /// about new URIs. Failures are logged; the commit already stands.
    pub(super) fn emit_commit(&self, meta: &SchemeMeta, version: u64, events: &[ChangeEvent], created: &[Uri]) {
        let entry = batch_entry(&meta.token, version, events);
        let links = vec![Link {
            label: "changes".into(),
            url: format!("{}/schemes/{}/changes?since={}", self.cfg.public_url, meta.token, version - 1),
        }];
        let mut drafts = Vec::new();
        if !created.is_empty() {
            let mut body = String::from("A new term URI has been created:\n");
            for u in created {
                body.push_str(&format!("{u}\n"));
            }
            for agent in meta.contacts() {
                drafts.push(NoticeDraft {
                    recipient: agent,
                    kind: NotificationKind::NewUri,
                    subject: format!("{}: new term URI", meta.token),
                    body: body.clone(),
                    links: links.clone(),
                });
            }
        }
        let semantic = is_semantic_commit(events, created);
        if let Err(e) = self.route(&meta.token, version, semantic, &entry.title, &entry.content, &links, drafts) {
            tracing::error!(error = %e, scheme = %meta.token, version, "notification routing failed");
        }
    }

    pub(super) fn emit_copy(&self, copy: &SequencedCopy) {
        let entry = copy_entry(copy);
        let d = &copy.diff_from_previous;
        let semantic = !d.created.is_empty() || !d.deprecated.is_empty() || !d.removed.is_empty();
        if let Err(e) = self.route(&copy.id, copy.seq, semantic, &entry.title, &entry.content, &[], Vec::new()) {
            tracing::error!(error = %e, copy = %copy.id, "notification routing failed");
        }
    }

    pub(super) fn record_ticket(&self, ticket: &ConfirmationTicket) -> Result<()> {
        let link = |answer: &str| Link {
            label: answer.to_string(),
            url: format!("{}/confirm/{}?answer={answer}", self.cfg.public_url, ticket.token),
        };
        let draft = NoticeDraft {
            recipient: ticket.issued_to.clone(),
            kind: NotificationKind::ConfirmationRequest,
            subject: format!("{}: confirmation needed for {}", ticket.scheme, ticket.pending.concept),
            body: ticket.question.clone(),
            links: vec![link("yes"), link("no")],
        };
        self.deliver(vec![JournalEntry::TicketIssued { ticket: ticket.clone() }], vec![draft])
    }

    fn scope_exists(&self, scope: &Scope) -> Result<()> {
        match scope {
            Scope::All => Ok(()),
            Scope::Scheme(s) if self.store.contains(s) || self.dir.lock().unwrap().state().copies.contains_key(s) => Ok(()),
            Scope::Scheme(s) => Err(RegistryError::UnknownScheme(s.clone())),
        }
    }

    /// Idempotent: an identical active subscription is returned as is.
    pub fn subscribe(&self, agent: &AgentId, scope: Scope, channel: Channel, granularity: Granularity) -> Result<Subscription> {
        self.require_agent(agent)?;
        self.scope_exists(&scope)?;
        let mut dir = self.dir.lock().unwrap();
        if let Some(s) = dir
            .state()
            .subscriptions
            .values()
            .find(|s| &s.agent == agent && s.scope == scope && s.channel == channel && s.granularity == granularity)
        {
            return Ok(s.clone());
        }
        let subscription = Subscription {
            id: dir.state().next_subscription_id(),
            agent: agent.clone(),
            scope,
            channel,
            granularity,
            created_at: self.now(),
        };
        dir.record(vec![JournalEntry::Subscribed { subscription: subscription.clone() }])?;
        Ok(subscription)
    }

    pub fn unsubscribe(&self, agent: &AgentId, id: &str) -> Result<()> {
        let mut dir = self.dir.lock().unwrap();
        match dir.state().subscriptions.get(id) {
            Some(s) if &s.agent == agent => dir.record(vec![JournalEntry::Unsubscribed { id: id.to_string() }]),
            Some(_) => Err(RegistryError::NotOwner),
            None => Err(RegistryError::InvalidInput(format!("no subscription `{id}`"))),
        }
    }

    pub fn subscriptions(&self, agent: &AgentId) -> Vec<Subscription> {
        self.dir.lock().unwrap().state().subscriptions.values().filter(|s| &s.agent == agent).cloned().collect()
    }

    /// Records that `agent` uses `scheme` and tells the owner, once.
    pub fn register_usage(&self, agent: &AgentId, scheme: &str) -> Result<UsageRegistration> {
        self.require_agent(agent)?;
        let owner = self.scheme_meta(scheme)?.owner;
        let messages = {
            let mut dir = self.dir.lock().unwrap();
            if let Some(u) = dir.state().usages.get(&(agent.clone(), scheme.to_string())) {
                return Ok(u.clone());
            }
            let usage = UsageRegistration { agent: agent.clone(), scheme: scheme.to_string(), registered_at: self.now() };
            let name = dir.state().agents.get(agent).map(|a| a.name.clone()).unwrap_or_default();
            let draft = NoticeDraft {
                recipient: owner,
                kind: NotificationKind::UsageRegistered,
                subject: format!("{scheme}: usage registered"),
                body: format!("Agent {agent} ({name}) registered its use of scheme {scheme}.\n"),
                links: Vec::new(),
            };
            let messages = self.journal_notices(&mut dir, vec![JournalEntry::UsageRegistered { usage: usage.clone() }], vec![draft])?;
            (usage, messages)
        };
        for m in &messages.1 {
            self.send(m);
        }
        Ok(messages.0)
    }

    pub fn usages(&self, scheme: &str) -> Vec<UsageRegistration> {
        self.dir.lock().unwrap().state().usages.values().filter(|u| u.scheme == scheme).cloned().collect()
    }

    pub fn notifications(&self, agent: &AgentId) -> Vec<Notification> {
        self.dir.lock().unwrap().state().notifications.iter().filter(|n| &n.recipient == agent).cloned().collect()
    }

    fn scheme_entries(&self, token: &str, since: Option<Since>) -> Result<Vec<FeedEntry>> {
        if let Some(seq) = self.dir.lock().unwrap().state().copies.get(token) {
            return Ok(seq
                .iter()
                .filter(|c| match since {
                    Some(Since::Version(v)) => c.seq > v,
                    Some(Since::Time(t)) => c.retrieved_at > t,
                    None => true,
                })
                .map(copy_entry)
                .collect());
        }
        let handle = self.store.get(token)?;
        let log = handle.lock().unwrap();
        Ok(log
            .batches()
            .iter()
            .enumerate()
            .map(|(i, b)| (i as u64 + 1, b))
            .filter(|(v, b)| match since {
                Some(Since::Version(s)) => *v > s,
                Some(Since::Time(t)) => b.first().is_some_and(|e| e.timestamp > t),
                None => true,
            })
            .map(|(v, b)| batch_entry(token, v, b))
            .collect())
    }

    fn feed_document(&self, id: &str, title: &str, mut entries: Vec<FeedEntry>) -> String {
        // Entries arrive oldest first per scheme; reversing before the stable
        // sort keeps same-instant commits newest first.
        entries.reverse();
        entries.sort_by(|a, b| b.updated.cmp(&a.updated));
        render_atom(id, title, DateTime::<Utc>::UNIX_EPOCH, &entries)
    }

    /// Atom feed of a scope: one entry per committed version (or copy
    /// sequence number), newest first.
    pub fn render_feed(&self, scope: &Scope, since: Option<Since>) -> Result<String> {
        self.scope_exists(scope)?;
        let (id, title, entries) = match scope {
            Scope::Scheme(t) => (format!("urn:reg:{t}"), format!("Changes to {t}"), self.scheme_entries(t, since)?),
            Scope::All => {
                let mut all = Vec::new();
                let copies: Vec<String> = self.dir.lock().unwrap().state().copies.keys().cloned().collect();
                for t in self.store.tokens().into_iter().chain(copies) {
                    all.extend(self.scheme_entries(&t, since)?);
                }
                ("urn:reg:all".to_string(), "Registry changes".to_string(), all)
            }
        };
        Ok(self.feed_document(&id, &title, entries))
    }

    /// Atom feed of what one subscription has been delivered.
    pub fn subscription_feed(&self, subscription: &str) -> Result<String> {
        let deliveries: Vec<Delivery> = {
            let dir = self.dir.lock().unwrap();
            if !dir.state().subscriptions.contains_key(subscription) {
                return Err(RegistryError::InvalidInput(format!("no subscription `{subscription}`")));
            }
            dir.state().deliveries.iter().filter(|d| d.subscription == subscription).cloned().collect()
        };
        let mut entries = Vec::new();
        for d in deliveries {
            let found = self
                .scheme_entries(&d.scheme, Some(Since::Version(d.version - 1)))?
                .into_iter()
                .find(|e| e.id == entry_id(&d.scheme, d.version));
            entries.extend(found);
        }
        Ok(self.feed_document(&format!("urn:reg:subscription:{subscription}"), &format!("Subscription {subscription}"), entries))
    }
}
