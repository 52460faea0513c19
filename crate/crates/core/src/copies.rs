//! Sequenced copies of vocabularies managed elsewhere.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{diff_states, SchemeDiff};
use crate::model::{SchemeState, Uri};

/// Copy ids use a `.`, which scheme tokens cannot contain, so the two never
/// collide in listings and subscription scopes.
pub const COPY_ID_PREFIX: &str = "copy.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequencedCopy {
    pub id: String,
    pub source: String,
    pub scheme_uri: Uri,
    pub seq: u64,
    pub state: SchemeState,
    pub retrieved_at: DateTime<Utc>,
    pub diff_from_previous: SchemeDiff,
    /// Peer version this copy reflects, when it came from a harvest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_version: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_token: Option<String>,
}

/// What ingesting `state` on top of `previous` would store, or `None` when
/// nothing changed.
pub fn next_copy(
    id: &str,
    source: &str,
    previous: Option<&SequencedCopy>,
    state: SchemeState,
    retrieved_at: DateTime<Utc>,
) -> Option<SequencedCopy> {
    let diff = match previous {
        Some(p) => {
            let d = diff_states(&p.state, &state);
            if d.is_empty() {
                return None;
            }
            d
        }
        None => diff_states(&SchemeState::new(state.uri.clone(), "", ""), &state),
    };
    Some(SequencedCopy {
        id: id.to_string(),
        source: source.to_string(),
        scheme_uri: state.uri.clone(),
        seq: previous.map_or(1, |p| p.seq + 1),
        state,
        retrieved_at,
        diff_from_previous: diff,
        source_version: None,
        source_token: None,
    })
}
