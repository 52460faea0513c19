#![allow(dead_code)]

pub mod audit;
pub mod gen;

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use tempfile::TempDir;
use vocab_registry::model::{AgentId, AgentKind, Contact, ConceptDraft, Uri, UriStrategy};
use vocab_registry::notify::MemorySink;
use vocab_registry::registry::{ManualClock, Registry, RegistryConfig};
use vocab_registry::store::StoreConfig;

pub const BASE: &str = "http://reg.example.org";

pub struct Env {
    pub dir: TempDir,
    pub reg: Arc<Registry>,
    pub sink: Arc<MemorySink>,
    pub clock: Arc<ManualClock>,
    pub owner: AgentId,
    pub owner_token: String,
}

pub fn config(dir: &std::path::Path) -> RegistryConfig {
    let mut cfg = RegistryConfig::new(dir);
    cfg.base_uri = BASE.into();
    cfg.public_url = BASE.into();
    cfg.store = StoreConfig { snapshot_interval: Some(100), sync: false };
    cfg
}

pub fn open(dir: &std::path::Path, clock: Arc<ManualClock>, sink: Arc<MemorySink>) -> Registry {
    Registry::open_with(config(dir), clock, sink).unwrap()
}

pub fn clock_and_sink() -> (Arc<ManualClock>, Arc<MemorySink>) {
    (Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap())), Arc::new(MemorySink::default()))
}

pub fn env() -> Env {
    let dir = TempDir::new().unwrap();
    let (clock, sink) = clock_and_sink();
    let reg = Arc::new(open(dir.path(), clock.clone(), sink.clone()));
    let (agent, owner_token) = reg
        .register_agent("Cornell Library", AgentKind::Organization, vec![Contact::new("admin", "m@x.org")])
        .unwrap();
    Env { dir, reg, sink, clock, owner: agent.id, owner_token }
}

impl Env {
    pub fn agent(&self, name: &str) -> AgentId {
        self.reg
            .register_agent(name, AgentKind::Individual, vec![Contact::new("mail", format!("{name}@x.org"))])
            .unwrap()
            .0
            .id
    }

    pub fn scheme(&self, token: &str) {
        self.reg
            .create_scheme(&self.owner, token, "GEM Subjects", "", UriStrategy::registry_assigned(None))
            .unwrap();
    }

    pub fn add(&self, token: &str, label: &str) -> Uri {
        self.reg.add_concept(token, &ConceptDraft::labelled("en", label), &self.owner, None).unwrap().0.uri
    }
}

pub fn u(s: &str) -> Uri {
    Uri::parse(s).unwrap()
}
