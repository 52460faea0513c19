//! The `vocabreg` command line.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error.

use std::ffi::OsString;
use std::fs::{File, OpenOptions, TryLockError};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{render_diff, render_event};
use crate::error::{RegistryError, Result};
use crate::kos::Format;
use crate::model::{AgentKind, Contact, StrategyKind, Uri, UriStrategy};
use crate::registry::{self, ImportRequest, Registry, RegistryConfig, DEFAULT_BASE_URI};
use crate::service;
use crate::wire;

pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Human,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "vocabreg", about = "Controlled vocabulary registry")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    #[arg(long, global = true, env = "REGISTRY_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    /// Base for registry-minted URIs.
    #[arg(long, global = true, env = "REGISTRY_BASE_URI", default_value = DEFAULT_BASE_URI)]
    pub base_uri: String,
    #[arg(long, global = true, env = "REGISTRY_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Address used in links sent to agents; defaults to `http://<bind>`.
    #[arg(long, global = true, env = "REGISTRY_PUBLIC_URL")]
    pub public_url: Option<String>,
    #[arg(long, global = true, value_enum, default_value = "human")]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve,
    /// Create a scheme from a vocabulary file.
    Import {
        file: PathBuf,
        #[arg(long, default_value = "triples")]
        format: String,
        #[arg(long)]
        owner: String,
        #[arg(long)]
        token: String,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        description: Option<String>,
        /// provided, template or registry_assigned.
        #[arg(long, default_value = "registry_assigned")]
        strategy: String,
        #[arg(long)]
        template: Option<String>,
        /// Owner-supplied URI base.
        #[arg(long)]
        uri_base: Option<String>,
    },
    /// Write a scheme snapshot to standard output.
    Export {
        token: String,
        #[arg(long)]
        version: Option<u64>,
        #[arg(long, default_value = "triples")]
        format: String,
    },
    /// List the changes between two versions.
    Diff { token: String, from: u64, to: u64 },
    /// Check a vocabulary file without importing it.
    Validate {
        file: PathBuf,
        #[arg(long, default_value = "triples")]
        format: String,
    },
    /// Show committed events, optionally only those touching one URI.
    History {
        token: String,
        #[arg(long)]
        uri: Option<String>,
    },
    /// Copy a peer registry's schemes into sequenced copies.
    Harvest { peer: String },
    /// Manage agents.
    Agent {
        #[command(subcommand)]
        command: AgentCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum AgentCommand {
    /// Register an agent and print its id and API token.
    Add {
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "individual")]
        kind: String,
        /// `label=address`; repeatable.
        #[arg(long = "contact", required = true)]
        contacts: Vec<String>,
    },
}

/// Holds `<data_dir>/.lock` for the life of the value.
#[derive(Debug)]
pub struct DataDirLock {
    _file: File,
}

impl DataDirLock {
    pub fn acquire(data_dir: &Path) -> Result<DataDirLock> {
        std::fs::create_dir_all(data_dir)?;
        let file = OpenOptions::new().create(true).truncate(false).write(true).open(data_dir.join(LOCK_FILE))?;
        match file.try_lock() {
            Ok(()) => Ok(DataDirLock { _file: file }),
            Err(TryLockError::WouldBlock) => Err(RegistryError::Locked),
            Err(TryLockError::Error(e)) => Err(e.into()),
        }
    }
}

impl Global {
    fn config(&self) -> RegistryConfig {
        let mut cfg = RegistryConfig::new(&self.data_dir);
        cfg.base_uri = self.base_uri.trim_end_matches('/').to_string();
        cfg.public_url = self.public_url.clone().unwrap_or_else(|| format!("http://{}", self.bind));
        cfg
    }

    fn open(&self) -> Result<(DataDirLock, Registry)> {
        let lock = DataDirLock::acquire(&self.data_dir)?;
        let reg = Registry::open(self.config())?;
        Ok((lock, reg))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| RegistryError::InvalidInput(format!("{}: {e}", path.display())))
}

fn strategy(kind: &str, template: Option<&str>, base: Option<&str>) -> Result<UriStrategy> {
    Ok(match kind.parse::<StrategyKind>()? {
        StrategyKind::Provided => UriStrategy::provided(),
        StrategyKind::RegistryAssigned => UriStrategy::registry_assigned(base),
        StrategyKind::Template => UriStrategy::template(
            template.ok_or_else(|| RegistryError::BadStrategy("--template is required".into()))?,
            base,
        ),
    })
}

fn contact(raw: &str) -> Result<Contact> {
    let (label, address) =
        raw.split_once('=').ok_or_else(|| RegistryError::InvalidInput(format!("contact `{raw}` is not label=address")))?;
    Ok(Contact::new(label, address))
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    let structured = g.output == Output::Structured;
    match cli.command {
        Command::Serve => {
            let (_lock, reg) = g.open()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(Arc::new(reg), &g.bind))?;
        }
        Command::Import { file, format, owner, token, title, description, strategy: kind, template, uri_base } => {
            let payload = read_file(&file)?;
            let req = ImportRequest {
                token,
                owner: owner.as_str().into(),
                format: format.parse()?,
                title,
                description,
                strategy: Some(strategy(&kind, template.as_deref(), uri_base.as_deref())?),
            };
            let (_lock, reg) = g.open()?;
            let meta = reg.import(&req, &payload)?;
            if structured {
                writeln!(out, "{}", wire::to_line(&meta))?;
            } else {
                writeln!(out, "{} version {}", meta.token, meta.head_version)?;
            }
        }
        Command::Export { token, version, format } => {
            let format: Format = format.parse()?;
            let (_lock, reg) = g.open()?;
            let (body, losses, _) = reg.export(&token, version, format)?;
            out.write_all(body.as_bytes())?;
            for e in &losses.entries {
                writeln!(err, "{e}")?;
            }
        }
        Command::Diff { token, from, to } => {
            let (_lock, reg) = g.open()?;
            let diff = reg.diff_versions(&token, from, to)?;
            if structured {
                out.write_all(wire::to_lines(&diff.items).as_bytes())?;
            } else {
                out.write_all(render_diff(&diff).as_bytes())?;
            }
        }
        Command::Validate { file, format } => {
            let payload = read_file(&file)?;
            let format: Format = format.parse()?;
            let violations = registry::validate_payload(&payload, format, &crate::kos::Vocabulary::default())?;
            if structured {
                out.write_all(wire::to_lines(&violations).as_bytes())?;
            } else {
                for v in &violations {
                    writeln!(out, "{v}")?;
                }
            }
            let errors: Vec<_> = violations.into_iter().filter(|v| v.is_error()).collect();
            if !errors.is_empty() {
                return Err(RegistryError::ValidationFailed(errors));
            }
        }
        Command::History { token, uri } => {
            let uri = uri.as_deref().map(Uri::parse).transpose()?;
            let (_lock, reg) = g.open()?;
            let events = reg.history(&token, uri.as_ref())?;
            if structured {
                out.write_all(wire::to_lines(&events).as_bytes())?;
            } else {
                for ev in &events {
                    out.write_all(render_event(ev).as_bytes())?;
                }
            }
        }
        Command::Harvest { peer } => {
            let (_lock, reg) = g.open()?;
            let rt = tokio::runtime::Runtime::new()?;
            let report = rt.block_on(service::harvest(&reg, &reqwest::Client::new(), &peer))?;
            if structured {
                writeln!(out, "{}", wire::to_line(&report))?;
            } else {
                writeln!(out, "harvested {}: {} schemes fetched, {} updated", report.peer, report.schemes, report.updated.len())?;
                for id in &report.updated {
                    writeln!(out, "updated {id}")?;
                }
            }
        }
        Command::Agent { command: AgentCommand::Add { name, kind, contacts } } => {
            let kind: AgentKind = kind.parse()?;
            let contacts = contacts.iter().map(|c| contact(c)).collect::<Result<Vec<_>>>()?;
            let (_lock, reg) = g.open()?;
            let (agent, api_token) = reg.register_agent(&name, kind, contacts)?;
            if structured {
                writeln!(out, "{}", wire::to_line(&serde_json::json!({ "id": agent.id, "api_token": api_token })))?;
            } else {
                writeln!(out, "{} {}", agent.id, api_token)?;
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            if let RegistryError::ValidationFailed(v) = &e {
                for v in v {
                    let _ = writeln!(err, "{v}");
                }
            }
            let _ = writeln!(err, "error: {}: {e}", e.code());
            1
        }
    }
}
