//! A random maintainer driving one hosted scheme through the registry API.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;
use vocab_registry::engine::{Edit, FieldPath, MaintainerAssertion, Outcome};
use vocab_registry::model::{AgentId, Concept, ConceptDraft, LangText, StatusTerm, Uri, UriStrategy};
use vocab_registry::notify::Answer;
use vocab_registry::registry::{Registry, Resolution, UpdateOutcome, UpdateRequest};
use vocab_registry::RegistryError;

/// Which operations a sequence may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mix {
    /// Only edits the rule table keeps on the same URI.
    NonSemantic,
    /// Non-semantic edits plus successor-minting ones.
    Semantic,
    /// Everything, including deprecation and declined confirmations.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Created { version: u64, uri: Uri },
    Kept { version: Option<u64>, uri: Uri },
    Succession { version: u64, olds: Vec<Uri>, news: Vec<Uri> },
    Deprecated { version: u64, uri: Uri },
    /// The registry refused the operation without committing.
    Refused,
    Discarded,
}

pub struct World<'a> {
    pub reg: &'a Registry,
    pub owner: AgentId,
    pub token: String,
    pub r: StdRng,
    /// Creation order, used to keep broader edges acyclic.
    pub order: Vec<Uri>,
    pub minted: BTreeSet<Uri>,
    pub effects: Vec<Effect>,
    labels: u64,
}

fn set(field: FieldPath, value: impl Into<String>) -> Edit {
    Edit::Set { field, value: value.into() }
}

fn add(field: FieldPath, value: impl Into<String>) -> Edit {
    Edit::Add { field, value: value.into() }
}

fn remove(field: FieldPath, value: impl Into<String>) -> Edit {
    Edit::Remove { field, value: value.into() }
}

fn en(s: &str) -> FieldPath {
    FieldPath::Definition(s.into())
}

/// Errors a random operation may legitimately run into.
fn refusable(e: &RegistryError) -> bool {
    matches!(e, RegistryError::ValidationFailed(_) | RegistryError::SuccessionInvalid(_))
}

impl<'a> World<'a> {
    pub fn new(reg: &'a Registry, owner: &AgentId, token: &str, r: StdRng) -> Self {
        reg.create_scheme(owner, token, &format!("Scheme {token}"), "", UriStrategy::registry_assigned(None)).unwrap();
        World {
            reg,
            owner: owner.clone(),
            token: token.into(),
            r,
            order: Vec::new(),
            minted: BTreeSet::new(),
            effects: Vec::new(),
            labels: 0,
        }
    }

    fn label(&mut self) -> String {
        self.labels += 1;
        format!("{} term {}", self.token, self.labels)
    }

    pub fn live(&self) -> Vec<Concept> {
        let head = self.reg.head_state(&self.token).unwrap();
        head.state.concepts.into_values().filter(|c| !c.is_deprecated()).collect()
    }

    fn rank(&self, u: &Uri) -> usize {
        self.order.iter().position(|x| x == u).unwrap_or(usize::MAX)
    }

    fn pick(&mut self, pred: impl Fn(&Concept) -> bool) -> Option<Concept> {
        let live: Vec<Concept> = self.live().into_iter().filter(|c| pred(c)).collect();
        live.choose(&mut self.r).cloned()
    }

    fn created(&mut self, uri: &Uri) {
        self.order.push(uri.clone());
        self.minted.insert(uri.clone());
    }

    /// A live concept created before `c`, for an acyclic broader edge.
    fn earlier(&mut self, c: &Concept) -> Option<Uri> {
        let rank = self.rank(&c.uri);
        let live = self.live();
        let options: Vec<&Uri> = live
            .iter()
            .map(|x| &x.uri)
            .filter(|u| self.rank(u) < rank && !c.broader.contains(*u) && !c.related.contains(*u))
            .collect();
        options.choose(&mut self.r).map(|u| (*u).clone())
    }

    pub fn add_concept(&mut self, defined: bool, with_broader: bool) -> Result<Effect, String> {
        let mut draft = ConceptDraft::labelled("en", &self.label());
        if defined {
            draft.definitions.push(LangText::new("en", &format!("Meaning {}", self.labels)));
        }
        if with_broader {
            if let Some(b) = self.live().choose(&mut self.r) {
                draft.broader.push(b.uri.clone());
            }
        }
        let (c, version) = self.reg.add_concept(&self.token, &draft, &self.owner, None).map_err(|e| format!("add: {e}"))?;
        self.created(&c.uri);
        Ok(Effect::Created { version, uri: c.uri })
    }

    fn update(&self, uri: &Uri, edits: Vec<Edit>, assertion: Option<MaintainerAssertion>) -> Result<UpdateOutcome, RegistryError> {
        let req = UpdateRequest { edits, assertion, expected_version: None, successor_uri: None };
        self.reg.update_concept(&self.token, uri, &req, &self.owner)
    }

    /// An edit the rule table keeps on the same URI. Anything else is a
    /// violation.
    fn expect_kept(&mut self, uri: &Uri, edits: Vec<Edit>, assertion: Option<MaintainerAssertion>) -> Result<Effect, String> {
        match self.update(uri, edits.clone(), assertion) {
            Ok(UpdateOutcome::Updated { version, uri: u, classification }) => {
                if &u != uri {
                    return Err(format!("update of {uri} reported {u}"));
                }
                match classification {
                    Some(k) if k.outcome != Outcome::NonSemantic => Err(format!("{edits:?} classified {k:?}")),
                    Some(_) => Ok(Effect::Kept { version: Some(version), uri: u }),
                    None => Ok(Effect::Kept { version: None, uri: u }),
                }
            }
            Ok(other) => Err(format!("non-semantic edit {edits:?} on {uri} gave {other:?}")),
            Err(e) if refusable(&e) => Ok(Effect::Refused),
            Err(e) => Err(format!("{edits:?} on {uri}: {e}")),
        }
    }

    fn expect_successor(&mut self, uri: &Uri, edits: Vec<Edit>, assertion: Option<MaintainerAssertion>) -> Result<Effect, String> {
        match self.update(uri, edits.clone(), assertion) {
            Ok(UpdateOutcome::SuccessorMinted { version, deprecated, uri: new, classification }) => {
                if classification.outcome != Outcome::Semantic || &deprecated != uri {
                    return Err(format!("successor for {uri}: {classification:?}, deprecated {deprecated}"));
                }
                self.created(&new);
                Ok(Effect::Succession { version, olds: vec![deprecated], news: vec![new] })
            }
            Ok(other) => Err(format!("semantic edit {edits:?} on {uri} gave {other:?}")),
            Err(e) if refusable(&e) => Ok(Effect::Refused),
            Err(e) => Err(format!("{edits:?} on {uri}: {e}")),
        }
    }

    fn non_semantic(&mut self) -> Result<Effect, String> {
        if self.order.is_empty() || self.r.random_bool(0.15) {
            let (d, b) = (self.r.random_bool(0.5), self.r.random_bool(0.5));
            return self.add_concept(d, b);
        }
        let Some(c) = self.pick(|_| true) else { return self.add_concept(true, false) };
        let uri = c.uri.clone();
        match self.r.random_range(0..10) {
            0 => {
                let l = self.label();
                self.expect_kept(&uri, vec![set(FieldPath::PrefLabel("en".into()), l)], None)
            }
            1 => {
                let l = self.label();
                let lang = *["en", "fr"].choose(&mut self.r).unwrap();
                self.expect_kept(&uri, vec![add(FieldPath::AltLabel(lang.into()), l)], None)
            }
            2 if !c.has_definition() => self.expect_kept(&uri, vec![set(en("en"), "First definition.")], None),
            2 => {
                let text = format!("{} (typo fixed)", c.definition.values().next().unwrap());
                self.expect_kept(&uri, vec![set(en("en"), text)], Some(MaintainerAssertion::Clarification))
            }
            3 => {
                let note = format!("Scope {}", self.r.random_range(0..100));
                self.expect_kept(&uri, vec![set(FieldPath::ScopeNote("en".into()), note)], None)
            }
            4 => {
                let note = format!("Note {}", self.r.random_range(0..100));
                self.expect_kept(&uri, vec![add(FieldPath::Note, note)], None)
            }
            5 => match self.earlier(&c) {
                Some(b) => self.expect_kept(&uri, vec![add(FieldPath::Broader, b.to_string())], None),
                None => Ok(Effect::Refused),
            },
            6 => {
                let other = self.pick(|o| o.uri != uri && !c.broader.contains(&o.uri) && !o.broader.contains(&uri));
                match other {
                    Some(o) if c.related.contains(&o.uri) => {
                        self.expect_kept(&uri, vec![remove(FieldPath::Related, o.uri.to_string())], None)
                    }
                    Some(o) => self.expect_kept(&uri, vec![add(FieldPath::Related, o.uri.to_string())], None),
                    None => Ok(Effect::Refused),
                }
            }
            7 if c.has_definition() && !c.broader.is_empty() => {
                let b = c.broader.iter().next().unwrap().to_string();
                self.expect_kept(&uri, vec![remove(FieldPath::Broader, b)], Some(MaintainerAssertion::Clarification))
            }
            8 if c.alt_labels.values().any(|s| !s.is_empty()) => {
                // Swap the English preferred label with an alternative one.
                let (lang, alts) = c.alt_labels.iter().find(|(_, s)| !s.is_empty()).unwrap();
                let alt = alts.iter().next().unwrap().clone();
                let mut edits = vec![remove(FieldPath::AltLabel(lang.clone()), alt.clone())];
                if let Some(pref) = c.pref_labels.get(lang) {
                    edits.push(add(FieldPath::AltLabel(lang.clone()), pref.clone()));
                }
                edits.push(set(FieldPath::PrefLabel(lang.clone()), alt));
                self.expect_kept(&uri, edits, None)
            }
            _ => {
                let to = match c.status {
                    StatusTerm::Proposed => StatusTerm::Approved,
                    _ => StatusTerm::Proposed,
                };
                match self.reg.set_status(&self.token, &uri, to, &self.owner) {
                    Ok(version) => Ok(Effect::Kept { version: Some(version), uri }),
                    Err(e) => Err(format!("status of {uri}: {e}")),
                }
            }
        }
    }

    fn semantic(&mut self) -> Result<Effect, String> {
        match self.r.random_range(0..5) {
            0 => {
                let Some(c) = self.pick(Concept::has_definition) else { return self.add_concept(true, false) };
                let text = format!("A different meaning {}", self.r.random_range(0..1000));
                self.expect_successor(&c.uri, vec![set(en("en"), text)], Some(MaintainerAssertion::MeaningChange))
            }
            1 => {
                let Some(c) = self.pick(|c| !c.has_definition() && !c.broader.is_empty()) else {
                    return self.add_concept(false, true);
                };
                let old = c.broader.iter().next().unwrap().to_string();
                let mut edits = vec![remove(FieldPath::Broader, old)];
                if let Some(b) = self.earlier(&c) {
                    edits.push(add(FieldPath::Broader, b.to_string()));
                }
                self.expect_successor(&c.uri, edits, None)
            }
            2 => {
                let Some(c) = self.pick(|_| true) else { return self.add_concept(true, false) };
                let drafts = [ConceptDraft::labelled("en", &self.label()), ConceptDraft::labelled("en", &self.label())];
                match self.reg.split_concept(&self.token, &c.uri, &drafts, &self.owner, None) {
                    Ok((news, version)) => {
                        news.iter().for_each(|u| self.created(u));
                        Ok(Effect::Succession { version, olds: vec![c.uri], news })
                    }
                    Err(e) if refusable(&e) => Ok(Effect::Refused),
                    Err(e) => Err(format!("split {}: {e}", c.uri)),
                }
            }
            3 => {
                let live = self.live();
                if live.len() < 2 {
                    return self.add_concept(false, false);
                }
                let pair: Vec<Uri> = live.choose_multiple(&mut self.r, 2).map(|c| c.uri.clone()).collect();
                let draft = ConceptDraft::labelled("en", &self.label());
                match self.reg.merge_concepts(&self.token, &pair, &draft, &self.owner, None) {
                    Ok((new, version)) => {
                        self.created(&new);
                        Ok(Effect::Succession { version, olds: pair, news: vec![new] })
                    }
                    Err(e) if refusable(&e) => Ok(Effect::Refused),
                    Err(e) => Err(format!("merge {pair:?}: {e}")),
                }
            }
            _ => self.confirmed(Answer::Yes),
        }
    }

    /// A definition edit with no assertion, answered through its ticket.
    fn confirmed(&mut self, answer: Answer) -> Result<Effect, String> {
        let Some(c) = self.pick(Concept::has_definition) else { return self.add_concept(true, false) };
        let text = format!("Reworded {}", self.r.random_range(0..1000));
        let ticket = match self.update(&c.uri, vec![set(en("en"), text)], None) {
            Ok(UpdateOutcome::PendingConfirmation { ticket, classification, .. }) if classification.outcome == Outcome::NeedsConfirmation => ticket,
            other => return Err(format!("definition edit without assertion gave {other:?}")),
        };
        match self.reg.resolve_confirmation(&ticket, answer) {
            Ok(Resolution::Applied { outcome: UpdateOutcome::SuccessorMinted { version, deprecated, uri, .. } }) => {
                self.created(&uri);
                Ok(Effect::Succession { version, olds: vec![deprecated], news: vec![uri] })
            }
            Ok(Resolution::Discarded { .. }) if answer == Answer::No => Ok(Effect::Discarded),
            Err(e) if refusable(&e) => Ok(Effect::Refused),
            other => Err(format!("resolving {answer:?}: {other:?}")),
        }
    }

    pub fn step(&mut self, mix: Mix) -> Result<(), String> {
        let effect = match mix {
            Mix::NonSemantic => self.non_semantic()?,
            Mix::Semantic if self.r.random_bool(0.5) => self.semantic()?,
            Mix::Semantic => self.non_semantic()?,
            Mix::Any => match self.r.random_range(0..10) {
                0..=3 => self.non_semantic()?,
                4..=6 => self.semantic()?,
                7 => self.confirmed(Answer::No)?,
                _ => match self.pick(|_| true) {
                    Some(c) => {
                        let version = self.reg.deprecate_concept(&self.token, &c.uri, &self.owner).map_err(|e| e.to_string())?;
                        Effect::Deprecated { version, uri: c.uri }
                    }
                    None => self.add_concept(false, false)?,
                },
            },
        };
        self.effects.push(effect);
        Ok(())
    }

    pub fn run(&mut self, mix: Mix, steps: usize) -> Result<(), String> {
        for _ in 0..steps {
            self.step(mix)?;
        }
        Ok(())
    }

    pub fn head(&self) -> u64 {
        self.reg.head_version(&self.token).unwrap()
    }

    /// Concept URIs present at each version, 1-based.
    pub fn uris_by_version(&self) -> BTreeMap<u64, BTreeSet<Uri>> {
        (1..=self.head())
            .map(|v| (v, self.reg.snapshot_at(&self.token, v).unwrap().state.concepts.into_keys().collect()))
            .collect()
    }
}
