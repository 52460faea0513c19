use std::io;

use thiserror::Error;

use crate::model::Uri;
use crate::validation::Violation;

pub type Result<T, E = RegistryError> = std::result::Result<T, E>;

/// Every failure the registry reports. `code()` is the stable identifier used
/// on the wire and in CLI output.
#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("agent name must not be empty")]
    EmptyName,
    #[error("an agent needs at least one contact")]
    NoContacts,
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("scheme token `{0}` is already taken")]
    TokenTaken(String),
    #[error("bad scheme token `{0}`: must match [a-z0-9-]{{1,32}}")]
    BadToken(String),
    #[error("bad URI strategy: {0}")]
    BadStrategy(String),
    #[error("only the scheme owner may do this")]
    NotOwner,
    #[error("agent `{0}` is not a maintainer of this scheme")]
    NotMaintainer(String),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("validation failed: {}", rule_list(.0))]
    ValidationFailed(Vec<Violation>),
    #[error("URI `{0}` is already registered")]
    DuplicateUri(Uri),
    #[error("bad URI `{0}`: {1}")]
    BadUri(String, String),
    #[error("slug templates need a label to mint from")]
    MissingLabelForSlug,
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("concept `{0}` is deprecated and cannot be edited")]
    Deprecated(Uri),
    #[error("concept `{0}` is already deprecated")]
    AlreadyDeprecated(Uri),
    #[error("concept `{0}` is deprecated; deprecation is terminal")]
    DeprecatedIsTerminal(Uri),
    #[error("no edits supplied")]
    EmptyEdits,
    #[error("cannot diff concepts with different URIs: `{0}` vs `{1}`")]
    UriMismatch(Uri, Uri),
    #[error("nothing to classify")]
    EmptyItems,
    #[error("a split needs at least two drafts")]
    TooFewDrafts,
    #[error("a merge needs at least two distinct source concepts")]
    TooFewSources,
    #[error("empty commit batch")]
    EmptyBatch,
    #[error("version conflict: expected {expected}, head is {head}")]
    VersionConflict { expected: u64, head: u64 },
    #[error("unknown version {0}")]
    UnknownVersion(u64),
    #[error("unknown format `{0}`")]
    UnknownFormat(String),
    #[error("parse failed: {0}")]
    ParseFailed(String),
    #[error("URI minting failed: {0}")]
    MintFailed(String),
    #[error("no subject is typed skos:ConceptScheme")]
    NoScheme,
    #[error("more than one subject is typed skos:ConceptScheme")]
    MultipleSchemes,
    #[error("bad CSV header: expected `uri,prefLabel,definition,broader,status`")]
    BadHeader,
    #[error("bad CSV row at line {0}: {1}")]
    BadRow(usize, String),
    #[error("unknown confirmation token")]
    UnknownToken,
    #[error("confirmation token already used")]
    TokenUsed,
    #[error("confirmation token expired")]
    TokenExpired,
    #[error("corrupt log record at version {version}")]
    CorruptRecord { version: u64 },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("peer unreachable: {0}")]
    PeerUnreachable(String),
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("missing or invalid API token")]
    Unauthorized,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("succession structure invalid: {0}")]
    SuccessionInvalid(String),
    #[error("data directory is locked by another process")]
    Locked,
}

fn rule_list(v: &[Violation]) -> String {
    let mut ids: Vec<&str> = v.iter().map(|v| v.rule.as_str()).collect();
    ids.dedup();
    ids.join(", ")
}

impl RegistryError {
    pub fn code(&self) -> &'static str {
        use RegistryError::*;
        match self {
            EmptyName => "EmptyName",
            NoContacts => "NoContacts",
            UnknownAgent(_) => "UnknownAgent",
            TokenTaken(_) => "TokenTaken",
            BadToken(_) => "BadToken",
            BadStrategy(_) => "BadStrategy",
            NotOwner => "NotOwner",
            NotMaintainer(_) => "NotMaintainer",
            UnknownScheme(_) => "UnknownScheme",
            ValidationFailed(_) => "ValidationFailed",
            DuplicateUri(_) => "DuplicateUri",
            BadUri(..) => "BadUri",
            MissingLabelForSlug => "MissingLabelForSlug",
            UnknownConcept(_) => "UnknownConcept",
            Deprecated(_) => "Deprecated",
            AlreadyDeprecated(_) => "AlreadyDeprecated",
            DeprecatedIsTerminal(_) => "DeprecatedIsTerminal",
            EmptyEdits => "EmptyEdits",
            UriMismatch(..) => "UriMismatch",
            EmptyItems => "EmptyItems",
            TooFewDrafts => "TooFewDrafts",
            TooFewSources => "TooFewSources",
            EmptyBatch => "EmptyBatch",
            VersionConflict { .. } => "VersionConflict",
            UnknownVersion(_) => "UnknownVersion",
            UnknownFormat(_) => "UnknownFormat",
            ParseFailed(_) => "ParseFailed",
            MintFailed(_) => "MintFailed",
            NoScheme => "NoScheme",
            MultipleSchemes => "MultipleSchemes",
            BadHeader => "BadHeader",
            BadRow(..) => "BadRow",
            UnknownToken => "UnknownToken",
            TokenUsed => "TokenUsed",
            TokenExpired => "TokenExpired",
            CorruptRecord { .. } => "CorruptRecord",
            Io(_) => "IoFailure",
            PeerUnreachable(_) => "PeerUnreachable",
            ProtocolError(_) => "ProtocolError",
            Unauthorized => "Unauthorized",
            InvalidInput(_) => "InvalidInput",
            SuccessionInvalid(_) => "SuccessionInvalid",
            Locked => "Locked",
        }
    }

    /// Rule ids carried by a `ValidationFailed`, in report order.
    pub fn rule_ids(&self) -> Vec<String> {
        match self {
            RegistryError::ValidationFailed(v) => {
                let mut ids: Vec<String> = v.iter().map(|v| v.rule.as_str().to_string()).collect();
                ids.dedup();
                ids
            }
            _ => Vec::new(),
        }
    }
}
