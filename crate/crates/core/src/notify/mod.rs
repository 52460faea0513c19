//! Subscriptions, notifications, usage registrations and confirmation
//! tickets, plus feed rendering and message delivery.

pub mod feed;
pub mod outbox;

use base64::Engine as _;
use chrono::{DateTime, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::engine::Edit;
use crate::model::{AgentId, Uri};

pub use feed::{batch_entry, entry_id, render_atom, FeedEntry};
pub use outbox::{FileSink, MemorySink, MessageSink, OutboxMessage};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    Scheme(String),
}

impl Scope {
    pub fn matches(&self, scheme: &str) -> bool {
        match self {
            Scope::All => true,
            Scope::Scheme(s) => s == scheme,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Feed,
    Message,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    EveryCommit,
    /// Only commits that create or deprecate URIs.
    SemanticOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscription {
    pub id: String,
    pub agent: AgentId,
    pub scope: Scope,
    pub channel: Channel,
    pub granularity: Granularity,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub label: String,
    pub url: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotificationKind {
    Change,
    ConfirmationRequest,
    ValidationProblem,
    UsageRegistered,
    NewUri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub id: String,
    pub recipient: AgentId,
    pub kind: NotificationKind,
    pub subject: String,
    pub body: String,
    pub links: Vec<Link>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageRegistration {
    pub agent: AgentId,
    pub scheme: String,
    pub registered_at: DateTime<Utc>,
}

/// An update held back until a maintainer answers a question about it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingChange {
    pub concept: Uri,
    pub edits: Vec<Edit>,
    pub base_version: u64,
    pub author: AgentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub successor_uri: Option<Uri>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfirmationTicket {
    pub token: String,
    pub scheme: String,
    pub pending: PendingChange,
    pub question: String,
    pub issued_to: AgentId,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
    pub used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
}

/// 128 random bits, base64url without padding (22 characters).
pub fn new_token() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    base64::engine::general_purpose::URL_SAFE_NO_PAD.encode(bytes)
}
