//! Registry-wide records that do not belong to a single scheme's history:
//! agents and their API tokens, subscriptions, usage registrations,
//! notifications, confirmation tickets, feed deliveries and sequenced copies.
//!
//! Persisted as a journal at `<data_dir>/.registry/journal` using the same
//! record framing as scheme logs. Every change is journaled before it is
//! applied in memory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::copies::SequencedCopy;
use crate::error::{RegistryError, Result};
use crate::frame;
use crate::model::{Agent, AgentId};
use crate::notify::{Answer, ConfirmationTicket, Notification, Subscription, UsageRegistration};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub subscription: String,
    pub scheme: String,
    pub version: u64,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JournalEntry {
    AgentRegistered { agent: Agent, api_token: String },
    Subscribed { subscription: Subscription },
    Unsubscribed { id: String },
    UsageRegistered { usage: UsageRegistration },
    Notified { notification: Notification },
    TicketIssued { ticket: ConfirmationTicket },
    TicketUsed { token: String, at: DateTime<Utc>, answer: Answer },
    Delivered { delivery: Delivery },
    CopyStored { copy: SequencedCopy },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectoryState {
    pub agents: BTreeMap<AgentId, Agent>,
    pub api_tokens: BTreeMap<String, AgentId>,
    pub subscriptions: BTreeMap<String, Subscription>,
    /// Ids of subscriptions ever created, including removed ones.
    pub subscription_count: u64,
    pub usages: BTreeMap<(AgentId, String), UsageRegistration>,
    pub notifications: Vec<Notification>,
    pub tickets: BTreeMap<String, ConfirmationTicket>,
    pub delivered: BTreeSet<(String, String, u64)>,
    pub deliveries: Vec<Delivery>,
    /// Copy id to its sequence, oldest first.
    pub copies: BTreeMap<String, Vec<SequencedCopy>>,
}

impl DirectoryState {
    fn apply(&mut self, entry: JournalEntry) {
        match entry {
            JournalEntry::AgentRegistered { agent, api_token } => {
                self.api_tokens.retain(|_, a| *a != agent.id);
                self.api_tokens.insert(api_token, agent.id.clone());
                self.agents.insert(agent.id.clone(), agent);
            }
            JournalEntry::Subscribed { subscription } => {
                self.subscription_count += 1;
                self.subscriptions.insert(subscription.id.clone(), subscription);
            }
            JournalEntry::Unsubscribed { id } => {
                self.subscriptions.remove(&id);
            }
            JournalEntry::UsageRegistered { usage } => {
                self.usages.insert((usage.agent.clone(), usage.scheme.clone()), usage);
            }
            JournalEntry::Notified { notification } => self.notifications.push(notification),
            JournalEntry::TicketIssued { ticket } => {
                self.tickets.insert(ticket.token.clone(), ticket);
            }
            JournalEntry::TicketUsed { token, .. } => {
                if let Some(t) = self.tickets.get_mut(&token) {
                    t.used = true;
                }
            }
            JournalEntry::Delivered { delivery } => {
                self.delivered.insert((delivery.subscription.clone(), delivery.scheme.clone(), delivery.version));
                self.deliveries.push(delivery);
            }
            JournalEntry::CopyStored { copy } => self.copies.entry(copy.id.clone()).or_default().push(copy),
        }
    }

    pub fn next_agent_id(&self) -> AgentId {
        AgentId(format!("a{}", self.agents.len()))
    }

    pub fn next_subscription_id(&self) -> String {
        format!("s{}", self.subscription_count + 1)
    }

    pub fn next_notification_id(&self) -> String {
        format!("n{}", self.notifications.len() + 1)
    }

    pub fn latest_copy(&self, id: &str) -> Option<&SequencedCopy> {
        self.copies.get(id).and_then(|v| v.last())
    }

    pub fn copy_id_for(&self, source: &str, scheme_uri: &crate::model::Uri) -> Option<&str> {
        self.copies
            .iter()
            .find(|(_, v)| v.first().is_some_and(|c| c.source == source && &c.scheme_uri == scheme_uri))
            .map(|(id, _)| id.as_str())
    }
}

#[derive(Debug)]
pub struct Directory {
    state: DirectoryState,
    file: File,
    sync: bool,
}

impl Directory {
    pub fn open(path: &Path, sync: bool) -> Result<Directory> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let scan = frame::scan(&bytes).map_err(|b| RegistryError::CorruptRecord { version: b.index as u64 + 1 })?;
        let mut state = DirectoryState::default();
        for (i, payload) in scan.payloads.iter().enumerate() {
            let entry: JournalEntry =
                serde_json::from_slice(payload).map_err(|_| RegistryError::CorruptRecord { version: i as u64 + 1 })?;
            state.apply(entry);
        }
        if scan.torn {
            tracing::warn!(dropped = bytes.len() - scan.valid_len, "truncating incomplete journal record");
            file.set_len(scan.valid_len as u64)?;
            file.sync_all()?;
        }
        Ok(Directory { state, file, sync })
    }

    pub fn state(&self) -> &DirectoryState {
        &self.state
    }

    /// Journals `entries` as consecutive records, then applies them.
    pub fn record(&mut self, entries: Vec<JournalEntry>) -> Result<()> {
        if entries.is_empty() {
            return Ok(());
        }
        let mut bytes = Vec::new();
        for e in &entries {
            bytes.extend(frame::encode(crate::wire::to_line(e).as_bytes()));
        }
        let before = self.file.metadata()?.len();
        let written = self.file.write_all(&bytes).and_then(|_| if self.sync { self.file.sync_data() } else { Ok(()) });
        if let Err(e) = written {
            let _ = self.file.set_len(before);
            return Err(e.into());
        }
        for e in entries {
            self.state.apply(e);
        }
        Ok(())
    }
}
