use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{apply_items, ChangeEvent, ChangeItem, EventKind, FieldPath, PendingEvent, SchemeChange};
use crate::error::{RegistryError, Result};
use crate::model::{Concept, SchemeMeta, SchemeState, Uri};

/// Registry metadata plus vocabulary content of one scheme at one version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Materialized {
    pub meta: SchemeMeta,
    pub state: SchemeState,
}

impl Materialized {
    /// Builds the version-1 state from the first event of a log.
    pub fn genesis(ev: &ChangeEvent) -> Result<Self> {
        let Some(SchemeChange::Created(c)) = &ev.scheme_change else {
            return Err(RegistryError::ProtocolError("log does not start with SchemeCreated".into()));
        };
        if ev.kind != EventKind::SchemeCreated || ev.version != 1 {
            return Err(RegistryError::ProtocolError("first event must be SchemeCreated at version 1".into()));
        }
        let mut state = SchemeState::new(c.uri.clone(), c.title.clone(), c.description.clone());
        state.extras = c.extras.clone();
        let meta = SchemeMeta {
            token: c.token.clone(),
            uri: c.uri.clone(),
            title: c.title.clone(),
            description: c.description.clone(),
            owner: c.owner.clone(),
            maintainers: BTreeSet::new(),
            uri_strategy: c.strategy.clone(),
            created_at: ev.timestamp,
            head_version: 1,
            next_numeric: 1,
        };
        let mut m = Materialized { meta, state };
        m.apply_items_of(ev)?;
        Ok(m)
    }

    pub fn apply(&mut self, ev: &ChangeEvent) -> Result<()> {
        let head = self.meta.head_version;
        if ev.version != head && ev.version != head + 1 {
            return Err(RegistryError::ProtocolError(format!("event version {} does not follow head {head}", ev.version)));
        }
        match (&ev.kind, &ev.scheme_change) {
            (EventKind::SchemeCreated, _) | (_, Some(SchemeChange::Created(_))) => {
                return Err(RegistryError::ProtocolError("scheme created twice".into()));
            }
            (_, Some(SchemeChange::MaintainerAdded { agent })) => {
                self.meta.maintainers.insert(agent.clone());
            }
            _ => {}
        }
        self.meta.head_version = ev.version;
        self.apply_items_of(ev)
    }

    fn apply_items_of(&mut self, ev: &ChangeEvent) -> Result<()> {
        apply_event_items(&mut self.state, ev)?;
        for item in &ev.items {
            if item.field == FieldPath::NumericId {
                if let Some(n) = item.new.as_deref().and_then(|v| v.parse::<u64>().ok()) {
                    self.meta.next_numeric = self.meta.next_numeric.max(n + 1);
                }
            }
        }
        Ok(())
    }
}

/// Folds one event into a bare scheme state. Used for non-hosted copies that
/// track a peer's history without its registry metadata.
pub fn apply_to_state(state: &mut SchemeState, ev: &ChangeEvent) -> Result<()> {
    if ev.kind == EventKind::SchemeCreated {
        return Err(RegistryError::ProtocolError("scheme created twice".into()));
    }
    apply_event_items(state, ev)
}

fn apply_event_items(state: &mut SchemeState, ev: &ChangeEvent) -> Result<()> {
    apply_items_to_state(state, ev.kind, ev.version, &ev.items)
}

/// Applies an uncommitted event to a scratch state. Like committed events,
/// it may not bring a deprecated concept back.
pub fn apply_pending(state: &mut SchemeState, ev: &PendingEvent) -> Result<()> {
    apply_items_to_state(state, ev.kind, 0, &ev.items)
}

fn apply_items_to_state(state: &mut SchemeState, kind: EventKind, version: u64, items: &[ChangeItem]) -> Result<()> {
    let mut grouped: BTreeMap<&Uri, Vec<ChangeItem>> = BTreeMap::new();
    let mut order: Vec<&Uri> = Vec::new();
    for item in items {
        let entry = grouped.entry(&item.concept).or_default();
        if entry.is_empty() {
            order.push(&item.concept);
        }
        entry.push(item.clone());
    }
    for uri in order {
        let items = &grouped[uri];
        let concept = match state.concepts.get_mut(uri) {
            Some(c) => c,
            None if kind.may_create() => state.concepts.entry(uri.clone()).or_insert_with(|| Concept::blank(uri.clone())),
            None => {
                return Err(RegistryError::ProtocolError(format!(
                    "{kind:?} at version {version} references unknown concept {uri}"
                )))
            }
        };
        if concept.is_deprecated() && items.iter().any(|i| i.field == FieldPath::Status) {
            return Err(RegistryError::DeprecatedIsTerminal(uri.clone()));
        }
        apply_items(concept, items)
            .map_err(|e| RegistryError::ProtocolError(format!("version {version}: {e}")))?;
    }
    Ok(())
}

/// Naive full replay of a log prefix.
pub fn replay(events: &[ChangeEvent]) -> Result<Materialized> {
    let (first, rest) = events
        .split_first()
        .ok_or_else(|| RegistryError::ProtocolError("empty history".into()))?;
    let mut m = Materialized::genesis(first)?;
    for ev in rest {
        m.apply(ev)?;
    }
    Ok(m)
}
