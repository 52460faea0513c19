//! Append-only per-scheme event logs with snapshot caching.
//!
//! Layout: `<root>/<token>/log` holds one framed [`LogRecord`] per committed
//! version; `<root>/<token>/snap-<version>` holds a framed [`Materialized`]
//! state. Snapshots are a cache and are ignored when unreadable.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{ChangeEvent, Materialized, PendingEvent};
use crate::error::{RegistryError, Result};
use crate::frame;
use crate::model::AgentId;

pub const LOG_FILE: &str = "log";
pub const DEFAULT_SNAPSHOT_INTERVAL: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub scheme: String,
    pub version: u64,
    pub events: Vec<ChangeEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreConfig {
    /// Write a snapshot every this many versions; `None` disables caching.
    pub snapshot_interval: Option<u64>,
    /// fsync after every append.
    pub sync: bool,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig { snapshot_interval: Some(DEFAULT_SNAPSHOT_INTERVAL), sync: true }
    }
}

fn snap_name(version: u64) -> String {
    format!("snap-{version}")
}

fn sync_dir(dir: &Path) {
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8], sync: bool) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        if sync {
            f.sync_all()?;
        }
    }
    fs::rename(&tmp, path)?;
    if sync {
        if let Some(parent) = path.parent() {
            sync_dir(parent);
        }
    }
    Ok(())
}

/// The committed history of one scheme. Callers hold its mutex for the
/// duration of a read-check-append cycle, which makes it the single writer.
#[derive(Debug)]
pub struct SchemeLog {
    token: String,
    dir: PathBuf,
    file: File,
    cfg: StoreConfig,
    batches: Vec<Vec<ChangeEvent>>,
    head: Materialized,
    snapshots: BTreeSet<u64>,
}

impl SchemeLog {
    fn create(dir: PathBuf, token: &str, batch: Vec<ChangeEvent>, cfg: StoreConfig) -> Result<Self> {
        let head = crate::engine::replay(&batch)?;
        let record = LogRecord { scheme: token.to_string(), version: 1, events: batch.clone() };
        fs::create_dir_all(&dir)?;
        let path = dir.join(LOG_FILE);
        write_atomic(&path, &frame::encode(crate::wire::to_line(&record).as_bytes()), cfg.sync)?;
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(SchemeLog { token: token.to_string(), dir, file, cfg, batches: vec![batch], head, snapshots: BTreeSet::new() })
    }

    /// Opens a log, truncating an incomplete trailing record left by an
    /// interrupted append. Running it again on the result changes nothing.
    pub fn open(dir: PathBuf, token: &str, cfg: StoreConfig) -> Result<Self> {
        let path = dir.join(LOG_FILE);
        let mut bytes = Vec::new();
        File::open(&path)?.read_to_end(&mut bytes)?;
        let scan = frame::scan(&bytes).map_err(|b| RegistryError::CorruptRecord { version: b.index as u64 + 1 })?;
        let mut batches = Vec::with_capacity(scan.payloads.len());
        for (i, payload) in scan.payloads.iter().enumerate() {
            let version = i as u64 + 1;
            let corrupt = || RegistryError::CorruptRecord { version };
            let rec: LogRecord = serde_json::from_slice(payload).map_err(|_| corrupt())?;
            if rec.version != version || rec.scheme != token || rec.events.is_empty() {
                return Err(corrupt());
            }
            batches.push(rec.events);
        }
        if batches.is_empty() {
            return Err(RegistryError::CorruptRecord { version: 1 });
        }
        let file = OpenOptions::new().append(true).open(&path)?;
        if scan.torn {
            tracing::warn!(scheme = token, kept = scan.valid_len, dropped = bytes.len() - scan.valid_len, "truncating incomplete log record");
            file.set_len(scan.valid_len as u64)?;
            file.sync_all()?;
        }
        let snapshots = list_snapshots(&dir);
        let head = fold(&dir, cfg, &batches, &snapshots, batches.len() as u64)?;
        Ok(SchemeLog { token: token.to_string(), dir, file, cfg, batches, head, snapshots })
    }

    pub fn token(&self) -> &str {
        &self.token
    }

    pub fn head(&self) -> u64 {
        self.batches.len() as u64
    }

    pub fn head_state(&self) -> &Materialized {
        &self.head
    }

    /// All committed batches; index `v - 1` holds version `v`.
    pub fn batches(&self) -> &[Vec<ChangeEvent>] {
        &self.batches
    }

    /// Events of versions `from..=to`, in commit order.
    pub fn read(&self, from: u64, to: u64) -> Result<Vec<ChangeEvent>> {
        if from == 0 || from > to {
            return Err(RegistryError::UnknownVersion(from));
        }
        if to > self.head() {
            return Err(RegistryError::UnknownVersion(to));
        }
        Ok(self.batches[(from - 1) as usize..to as usize].iter().flatten().cloned().collect())
    }

    pub fn next_seq(&self) -> u64 {
        self.batches.last().and_then(|b| b.last()).map_or(1, |e| e.seq + 1)
    }

    /// Stamps and appends one batch as version `expected + 1`. Durable before
    /// return when syncing is enabled; on failure the log is unchanged.
    pub fn append(
        &mut self,
        pending: Vec<PendingEvent>,
        expected: u64,
        author: &AgentId,
        timestamp: DateTime<Utc>,
    ) -> Result<Vec<ChangeEvent>> {
        if pending.is_empty() {
            return Err(RegistryError::EmptyBatch);
        }
        let head = self.head();
        if expected != head {
            return Err(RegistryError::VersionConflict { expected, head });
        }
        let version = head + 1;
        let first_seq = self.next_seq();
        let events: Vec<ChangeEvent> = pending
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.stamp(&self.token, version, first_seq + i as u64, timestamp, author))
            .collect();
        let mut next = self.head.clone();
        for ev in &events {
            next.apply(ev)?;
        }
        let record = LogRecord { scheme: self.token.clone(), version, events: events.clone() };
        let bytes = frame::encode(crate::wire::to_line(&record).as_bytes());
        let before = self.file.metadata()?.len();
        let written = self.file.write_all(&bytes).and_then(|_| if self.cfg.sync { self.file.sync_data() } else { Ok(()) });
        if let Err(e) = written {
            let _ = self.file.set_len(before);
            return Err(e.into());
        }
        self.batches.push(events.clone());
        self.head = next;
        if let Some(k) = self.cfg.snapshot_interval {
            if k > 0 && version % k == 0 {
                self.write_snapshot(version);
            }
        }
        Ok(events)
    }

    fn write_snapshot(&mut self, version: u64) {
        let bytes = frame::encode(crate::wire::to_line(&self.head).as_bytes());
        match write_atomic(&self.dir.join(snap_name(version)), &bytes, self.cfg.sync) {
            Ok(()) => {
                self.snapshots.insert(version);
            }
            Err(e) => tracing::warn!(scheme = %self.token, version, error = %e, "snapshot not written"),
        }
    }

    /// State after all events up to and including `version`.
    pub fn materialize(&self, version: u64) -> Result<Materialized> {
        if version == 0 || version > self.head() {
            return Err(RegistryError::UnknownVersion(version));
        }
        if version == self.head() {
            return Ok(self.head.clone());
        }
        fold(&self.dir, self.cfg, &self.batches, &self.snapshots, version)
    }
}

fn load_snapshot(dir: &Path, version: u64) -> Option<Materialized> {
    let bytes = fs::read(dir.join(snap_name(version))).ok()?;
    let scan = frame::scan(&bytes).ok()?;
    let [payload] = scan.payloads.as_slice() else { return None };
    let m: Materialized = serde_json::from_slice(payload).ok()?;
    (m.meta.head_version == version).then_some(m)
}

/// Nearest readable snapshot at or below `version`, then replay of the rest.
fn fold(dir: &Path, cfg: StoreConfig, batches: &[Vec<ChangeEvent>], snapshots: &BTreeSet<u64>, version: u64) -> Result<Materialized> {
    let cached = if cfg.snapshot_interval.is_some() {
        snapshots.range(..=version).rev().find_map(|v| load_snapshot(dir, *v))
    } else {
        None
    };
    let (mut m, from) = match cached {
        Some(m) => {
            let v = m.meta.head_version;
            (m, v)
        }
        None => (crate::engine::replay(&batches[0])?, 1),
    };
    for batch in &batches[from as usize..version as usize] {
        for ev in batch {
            m.apply(ev)?;
        }
    }
    Ok(m)
}

fn list_snapshots(dir: &Path) -> BTreeSet<u64> {
    let Ok(entries) = fs::read_dir(dir) else { return BTreeSet::new() };
    entries
        .filter_map(|e| e.ok()?.file_name().to_str()?.strip_prefix("snap-")?.parse().ok())
        .collect()
}

pub type SchemeHandle = Arc<Mutex<SchemeLog>>;

/// All scheme logs under one data directory.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    cfg: StoreConfig,
    logs: RwLock<BTreeMap<String, SchemeHandle>>,
}

impl Store {
    /// Opens every `<root>/<token>/log`, running recovery on each.
    pub fn open(root: impl Into<PathBuf>, cfg: StoreConfig) -> Result<Store> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let mut logs = BTreeMap::new();
        for entry in fs::read_dir(&root)? {
            let entry = entry?;
            let Some(name) = entry.file_name().to_str().map(str::to_string) else { continue };
            if name.starts_with('.') || !entry.path().join(LOG_FILE).is_file() {
                continue;
            }
            let log = SchemeLog::open(entry.path(), &name, cfg)?;
            logs.insert(name, Arc::new(Mutex::new(log)));
        }
        Ok(Store { root, cfg, logs: RwLock::new(logs) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn tokens(&self) -> Vec<String> {
        self.logs.read().unwrap().keys().cloned().collect()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.logs.read().unwrap().contains_key(token)
    }

    pub fn get(&self, token: &str) -> Result<SchemeHandle> {
        self.logs
            .read()
            .unwrap()
            .get(token)
            .cloned()
            .ok_or_else(|| RegistryError::UnknownScheme(token.to_string()))
    }

    /// Writes version 1 of a new scheme.
    pub fn create(&self, token: &str, pending: Vec<PendingEvent>, author: &AgentId, timestamp: DateTime<Utc>) -> Result<SchemeHandle> {
        if pending.is_empty() {
            return Err(RegistryError::EmptyBatch);
        }
        let mut logs = self.logs.write().unwrap();
        let dir = self.root.join(token);
        if logs.contains_key(token) || dir.join(LOG_FILE).exists() {
            return Err(RegistryError::TokenTaken(token.to_string()));
        }
        let batch: Vec<ChangeEvent> = pending
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.stamp(token, 1, i as u64 + 1, timestamp, author))
            .collect();
        let log = SchemeLog::create(dir, token, batch, self.cfg)?;
        if self.cfg.sync {
            sync_dir(&self.root);
        }
        let handle = Arc::new(Mutex::new(log));
        logs.insert(token.to_string(), handle.clone());
        Ok(handle)
    }
}
