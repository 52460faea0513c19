//! Outgoing messages. The default sink appends one structured-encoding line
//! per message to `<data_dir>/outbox`.

use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::Link;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxMessage {
    pub to: Vec<String>,
    pub subject: String,
    pub body: String,
    pub links: Vec<Link>,
}

pub trait MessageSink: Send + Sync {
    fn deliver(&self, msg: &OutboxMessage) -> io::Result<()>;
}

#[derive(Debug)]
pub struct FileSink {
    path: PathBuf,
    lock: Mutex<()>,
}

impl FileSink {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        FileSink { path: path.into(), lock: Mutex::new(()) }
    }
}

impl MessageSink for FileSink {
    fn deliver(&self, msg: &OutboxMessage) -> io::Result<()> {
        let _guard = self.lock.lock().unwrap();
        let mut line = crate::wire::to_line(msg);
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.sync_data()
    }
}

/// Keeps messages in memory; for tests and embedding.
#[derive(Debug, Default)]
pub struct MemorySink {
    messages: Mutex<Vec<OutboxMessage>>,
}

impl MemorySink {
    pub fn messages(&self) -> Vec<OutboxMessage> {
        self.messages.lock().unwrap().clone()
    }
}

impl MessageSink for MemorySink {
    fn deliver(&self, msg: &OutboxMessage) -> io::Result<()> {
        self.messages.lock().unwrap().push(msg.clone());
        Ok(())
    }
}
