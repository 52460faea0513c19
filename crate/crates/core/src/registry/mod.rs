//! The registry: hosted schemes and their histories, agents, notifications
//! and sequenced copies of external vocabularies, over one data directory.
//!
//! Every commit goes through [`Registry::commit_with`], which holds the
//! scheme's writer lock, checks the expected version and the author's role,
//! validates the resulting state and appends one batch.

mod copies;
mod io;
mod lifecycle;
mod notices;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::directory::{Directory, JournalEntry};
use crate::engine::{ChangeEvent, Materialized, PendingEvent};
use crate::error::{RegistryError, Result};
use crate::kos::Vocabulary;
use crate::mint::{self, MintRequest, Minted};
use crate::model::{Agent, AgentId, AgentKind, Contact, Uri, UriStrategy};
use crate::notify::{self, FileSink, MessageSink};
use crate::rdf::REG_DEFAULT;
use crate::store::{Store, StoreConfig};
use crate::validation::{self, Violation};

pub use copies::{HarvestReport, HarvestedScheme, IngestOutcome};
pub use io::{validate_payload, ImportRequest, SchemeKind, SchemeSummary, Since};
pub use lifecycle::{Preview, Resolution, UpdateOutcome, UpdateRequest};

pub const STATUS_TOKEN: &str = "status";
pub const SYSTEM_AGENT: &str = "a0";
pub const DEFAULT_BASE_URI: &str = "http://localhost:8080";
pub const DEFAULT_TICKET_TTL_DAYS: i64 = 14;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        ManualClock(Mutex::new(start))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock().unwrap() = t;
    }

    pub fn advance(&self, d: Duration) {
        *self.0.lock().unwrap() += d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct RegistryConfig {
    pub data_dir: PathBuf,
    /// Base for registry-minted URIs.
    pub base_uri: String,
    /// Where this registry's HTTP API is reachable; used in message links.
    pub public_url: String,
    pub store: StoreConfig,
    pub ticket_ttl: Duration,
    /// Namespace of the registry-specific predicates in the triple carrier.
    pub reg_namespace: String,
}

impl RegistryConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        RegistryConfig {
            data_dir: data_dir.into(),
            base_uri: DEFAULT_BASE_URI.into(),
            public_url: DEFAULT_BASE_URI.into(),
            store: StoreConfig::default(),
            ticket_ttl: Duration::days(DEFAULT_TICKET_TTL_DAYS),
            reg_namespace: REG_DEFAULT.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Maintainer,
    Owner,
}

/// Result of one commit. `events` is empty when the request was a no-op.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Committed {
    pub version: u64,
    pub events: Vec<ChangeEvent>,
}

/// Hands out URIs inside one commit, tracking what the batch has used.
pub(crate) struct Minter<'a> {
    strategy: UriStrategy,
    token: String,
    base: &'a str,
    next: u64,
    taken: &'a dyn Fn(&Uri) -> bool,
    fresh: BTreeSet<Uri>,
}

impl Minter<'_> {
    pub(crate) fn mint(&mut self, provided: Option<&Uri>, label: Option<&str>) -> Result<Minted> {
        let req = MintRequest {
            strategy: self.strategy.clone(),
            scheme_token: self.token.clone(),
            provided_uri: provided.map(|u| u.to_string()),
            label_hint: label.map(str::to_string),
        };
        let fresh = &self.fresh;
        let taken = self.taken;
        let m = mint::mint(&req, self.base, self.next, |u| taken(u) || fresh.contains(u))?;
        if let Some(n) = m.numeric_id {
            self.next = n + 1;
        }
        self.fresh.insert(m.uri.clone());
        Ok(m)
    }

    pub(crate) fn observe(&mut self, numeric: u64) {
        self.next = self.next.max(numeric + 1);
    }
}

pub(crate) struct Ctx<'a> {
    pub head: &'a Materialized,
    pub minter: Minter<'a>,
}

pub struct Registry {
    cfg: RegistryConfig,
    vocab: Vocabulary,
    store: Store,
    dir: Mutex<Directory>,
    /// Every hosted scheme and concept URI, mapped to its scheme token.
    uris: Mutex<BTreeMap<Uri, String>>,
    /// Counter values handed out by [`Registry::next_numeric`].
    reserved: Mutex<BTreeMap<String, u64>>,
    clock: Arc<dyn Clock>,
    sink: Arc<dyn MessageSink>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry").field("data_dir", &self.cfg.data_dir).finish_non_exhaustive()
    }
}

impl Registry {
    /// Opens with the system clock and the outbox file sink.
    pub fn open(cfg: RegistryConfig) -> Result<Registry> {
        let sink = Arc::new(FileSink::new(cfg.data_dir.join("outbox")));
        Registry::open_with(cfg, Arc::new(SystemClock), sink)
    }

    pub fn open_with(cfg: RegistryConfig, clock: Arc<dyn Clock>, sink: Arc<dyn MessageSink>) -> Result<Registry> {
        mint::check_strategy(&UriStrategy::registry_assigned(None), "x", &cfg.base_uri)
            .map_err(|e| RegistryError::InvalidInput(format!("base URI: {e}")))?;
        let store = Store::open(&cfg.data_dir, cfg.store)?;
        let dir = Directory::open(&cfg.data_dir.join(".registry").join("journal"), cfg.store.sync)?;
        let mut uris = BTreeMap::new();
        for token in store.tokens() {
            let handle = store.get(&token)?;
            let log = handle.lock().unwrap();
            let m = log.head_state();
            uris.insert(m.state.uri.clone(), token.clone());
            for u in m.state.concepts.keys() {
                uris.insert(u.clone(), token.clone());
            }
        }
        let reg = Registry {
            vocab: Vocabulary::with_registry_namespace(&cfg.reg_namespace),
            cfg,
            store,
            dir: Mutex::new(dir),
            uris: Mutex::new(uris),
            reserved: Mutex::new(BTreeMap::new()),
            clock,
            sink,
        };
        reg.bootstrap()?;
        Ok(reg)
    }

    fn bootstrap(&self) -> Result<()> {
        if self.dir.lock().unwrap().state().agents.is_empty() {
            let contact = Contact::new("registry", self.cfg.public_url.clone());
            self.register_agent("Registry", AgentKind::Organization, vec![contact])?;
        }
        if !self.store.contains(STATUS_TOKEN) {
            self.create_status_scheme()?;
        }
        Ok(())
    }

    pub fn config(&self) -> &RegistryConfig {
        &self.cfg
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn system_agent(&self) -> AgentId {
        AgentId(SYSTEM_AGENT.into())
    }

    // ----- agents -----

    /// Registers an agent and issues its API token.
    pub fn register_agent(&self, name: &str, kind: AgentKind, contacts: Vec<Contact>) -> Result<(Agent, String)> {
        if name.trim().is_empty() {
            return Err(RegistryError::EmptyName);
        }
        if contacts.is_empty() {
            return Err(RegistryError::NoContacts);
        }
        let mut dir = self.dir.lock().unwrap();
        let agent = Agent { id: dir.state().next_agent_id(), kind, name: name.to_string(), contacts };
        let api_token = notify::new_token();
        dir.record(vec![JournalEntry::AgentRegistered { agent: agent.clone(), api_token: api_token.clone() }])?;
        Ok((agent, api_token))
    }

    pub fn agent(&self, id: &AgentId) -> Result<Agent> {
        self.dir
            .lock()
            .unwrap()
            .state()
            .agents
            .get(id)
            .cloned()
            .ok_or_else(|| RegistryError::UnknownAgent(id.to_string()))
    }

    pub fn agents(&self) -> Vec<Agent> {
        self.dir.lock().unwrap().state().agents.values().cloned().collect()
    }

    /// The agent holding `api_token`.
    pub fn authenticate(&self, api_token: &str) -> Result<AgentId> {
        self.dir.lock().unwrap().state().api_tokens.get(api_token).cloned().ok_or(RegistryError::Unauthorized)
    }

    fn require_agent(&self, id: &AgentId) -> Result<()> {
        self.agent(id).map(|_| ())
    }

    // ----- reading -----

    pub fn head_state(&self, token: &str) -> Result<Materialized> {
        Ok(self.store.get(token)?.lock().unwrap().head_state().clone())
    }

    pub fn head_version(&self, token: &str) -> Result<u64> {
        Ok(self.store.get(token)?.lock().unwrap().head())
    }

    pub fn scheme_meta(&self, token: &str) -> Result<crate::model::SchemeMeta> {
        Ok(self.head_state(token)?.meta)
    }

    pub fn snapshot_at(&self, token: &str, version: u64) -> Result<Materialized> {
        self.store.get(token)?.lock().unwrap().materialize(version)
    }

    pub fn is_uri_taken(&self, uri: &Uri) -> bool {
        self.uris.lock().unwrap().contains_key(uri)
    }

    /// Reserves the next numeric identifier of a scheme. Reserved values are
    /// never handed out again by this process.
    pub fn next_numeric(&self, token: &str) -> Result<u64> {
        let handle = self.store.get(token)?;
        let log = handle.lock().unwrap();
        let mut reserved = self.reserved.lock().unwrap();
        let slot = reserved.entry(token.to_string()).or_insert(0);
        let n = (*slot).max(log.head_state().meta.next_numeric);
        *slot = n + 1;
        Ok(n)
    }

    fn counter_start(&self, token: &str, head: &Materialized) -> u64 {
        let reserved = self.reserved.lock().unwrap().get(token).copied().unwrap_or(0);
        reserved.max(head.meta.next_numeric)
    }

    fn check_role(&self, head: &Materialized, author: &AgentId, role: Role) -> Result<()> {
        self.require_agent(author)?;
        match role {
            Role::Owner if head.meta.owner != *author => Err(RegistryError::NotOwner),
            Role::Maintainer if !head.meta.is_maintainer(author) => Err(RegistryError::NotMaintainer(author.to_string())),
            _ => Ok(()),
        }
    }

    /// Runs `build` against the head under the scheme's writer lock and
    /// commits what it returns. An empty event list is a successful no-op.
    fn commit_with<T>(
        &self,
        token: &str,
        author: &AgentId,
        expected: Option<u64>,
        role: Role,
        build: impl FnOnce(&mut Ctx<'_>) -> Result<(Vec<PendingEvent>, T)>,
    ) -> Result<(Committed, T)> {
        let handle = self.store.get(token)?;
        let mut log = handle.lock().unwrap();
        let head_version = log.head();
        if let Some(e) = expected {
            if e != head_version {
                return Err(RegistryError::VersionConflict { expected: e, head: head_version });
            }
        }
        let head = log.head_state().clone();
        self.check_role(&head, author, role)?;
        let mut uris = self.uris.lock().unwrap();
        let base = mint::check_strategy(&head.meta.uri_strategy, token, &self.cfg.base_uri)?;
        let taken = |u: &Uri| uris.contains_key(u) || head.state.concepts.contains_key(u);
        let mut ctx = Ctx {
            head: &head,
            minter: Minter {
                strategy: head.meta.uri_strategy.clone(),
                token: token.to_string(),
                base: &base,
                next: self.counter_start(token, &head),
                taken: &taken,
                fresh: BTreeSet::new(),
            },
        };
        let (pending, out) = build(&mut ctx)?;
        if pending.is_empty() {
            return Ok((Committed { version: head_version, events: Vec::new() }, out));
        }
        let violations = validation::validate_batch(&head.state, &pending)?;
        let errors: Vec<Violation> = violations.into_iter().filter(Violation::is_error).collect();
        if !errors.is_empty() {
            return Err(RegistryError::ValidationFailed(errors));
        }
        let events = log.append(pending, head_version, author, self.clock.now())?;
        let after = log.head_state().clone();
        let created: Vec<Uri> = after.state.concepts.keys().filter(|u| !head.state.concepts.contains_key(*u)).cloned().collect();
        for u in &created {
            uris.insert(u.clone(), token.to_string());
        }
        drop(uris);
        drop(log);
        let version = head_version + 1;
        self.emit_commit(&after.meta, version, &events, &created);
        Ok((Committed { version, events }, out))
    }
}
