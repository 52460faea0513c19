use std::collections::BTreeSet;
use std::sync::Barrier;

use vocab_registry::engine::{Edit, FieldPath, Outcome};
use vocab_registry::model::Uri;
use vocab_registry::notify::Answer;
use vocab_registry::registry::{Registry, Resolution, UpdateOutcome, UpdateRequest};
use vocab_registry::RegistryError;

use crate::common::{env, gen};
use crate::world::{Effect, Mix, World};

/// Sequences per registry instance, to keep each data directory small.
const PER_ENV: usize = 100;

fn sequences(count: usize, seed: u64, mut each: impl FnMut(&mut World, usize) -> Result<(), String>) -> Result<(), String> {
    for chunk in 0..count.div_ceil(PER_ENV) {
        let e = env();
        for i in chunk * PER_ENV..((chunk + 1) * PER_ENV).min(count) {
            let mut w = World::new(&e.reg, &e.owner, &format!("s{i}"), gen::rng(seed ^ i as u64));
            each(&mut w, i).map_err(|m| format!("sequence {i}: {m}"))?;
        }
    }
    Ok(())
}

pub fn uri_stability() -> Result<String, String> {
    let mut commits = 0;
    sequences(1000, 0x5eed_0001, |w, i| {
        w.run(Mix::NonSemantic, 4 + i % 12)?;
        let head = w.reg.head_state(&w.token).unwrap().state;
        let at_head: BTreeSet<Uri> = head.concepts.keys().cloned().collect();
        if at_head != w.minted {
            return Err(format!("head URIs {at_head:?} differ from created {:?}", w.minted));
        }
        for c in head.concepts.values() {
            if c.is_deprecated() || !c.replaced_by.is_empty() || !c.replaces.is_empty() {
                return Err(format!("{} lost its identity: {c:?}", c.uri));
            }
        }
        for ev in w.reg.history(&w.token, None).unwrap() {
            if let Some(k) = &ev.classification {
                if k.outcome != Outcome::NonSemantic {
                    return Err(format!("version {} committed as {:?}", ev.version, k.outcome));
                }
            }
        }
        commits += w.head() - 1;
        Ok(())
    })?;
    Ok(format!("1000 sequences, {commits} commits, 0 violations"))
}

/// Checks the deprecate-and-mint shape of the commit at `version`.
fn succession_shape(reg: &Registry, token: &str, version: u64, olds: &[Uri], news: &[Uri]) -> Result<(), String> {
    let before = reg.snapshot_at(token, version - 1).unwrap().state;
    let after = reg.snapshot_at(token, version).unwrap().state;
    let old_set: BTreeSet<Uri> = olds.iter().cloned().collect();
    let new_set: BTreeSet<Uri> = news.iter().cloned().collect();
    for o in olds {
        let (b, a) = (&before.concepts[o], &after.concepts[o]);
        if b.is_deprecated() || !a.is_deprecated() || a.replaced_by != new_set {
            return Err(format!("v{version}: predecessor {o} is not deprecated with replaced_by = {new_set:?}"));
        }
    }
    for n in news {
        if before.concepts.contains_key(n) {
            return Err(format!("v{version}: successor {n} already existed"));
        }
        let a = after.concepts.get(n).ok_or(format!("v{version}: successor {n} missing"))?;
        if a.replaces != old_set || a.is_deprecated() {
            return Err(format!("v{version}: successor {n} replaces {:?}", a.replaces));
        }
    }
    let diff = reg.diff_versions(token, version - 1, version).unwrap();
    if diff.created != new_set || diff.deprecated != old_set || !diff.removed.is_empty() {
        return Err(format!("v{version}: diff created {:?} deprecated {:?}", diff.created, diff.deprecated));
    }
    if let Some(stray) = diff.items.iter().find(|i| !old_set.contains(&i.concept) && !new_set.contains(&i.concept)) {
        return Err(format!("v{version}: unrelated concept {} touched", stray.concept));
    }
    Ok(())
}

pub fn semantic_contract() -> Result<String, String> {
    let mut checked = 0;
    sequences(300, 0x5eed_0002, |w, i| {
        w.run(Mix::Semantic, 6 + i % 10)?;
        let mut expected = BTreeSet::new();
        for eff in w.effects.clone() {
            if let Effect::Succession { version, olds, news } = eff {
                succession_shape(w.reg, &w.token, version, &olds, &news)?;
                expected.insert(version);
                checked += 1;
            }
        }
        // Every commit classified Semantic must be one of the checked ones.
        for ev in w.reg.history(&w.token, None).unwrap() {
            let semantic = ev.classification.as_ref().is_some_and(|k| k.outcome == Outcome::Semantic);
            if semantic && !expected.contains(&ev.version) {
                return Err(format!("unexpected semantic commit at v{}", ev.version));
            }
        }
        Ok(())
    })?;
    if checked == 0 {
        return Err("no semantic commits were generated".into());
    }
    Ok(format!("300 sequences, {checked} semantic commits, 0 violations"))
}

pub fn no_deletion() -> Result<String, String> {
    let mut uris = 0;
    sequences(300, 0x5eed_0003, |w, i| {
        w.run(Mix::Any, 8 + i % 16)?;
        let by_version = w.uris_by_version();
        for (v, set) in &by_version {
            if let Some(prev) = by_version.get(&(v - 1)) {
                if let Some(lost) = prev.difference(set).next() {
                    return Err(format!("{lost} vanished at v{v}"));
                }
            }
        }
        for u in &w.minted {
            match w.reg.resolve(u) {
                Ok((t, Some(_))) if t == w.token => {}
                other => return Err(format!("{u} does not resolve: {other:?}")),
            }
        }
        uris += w.minted.len();
        Ok(())
    })?;
    Ok(format!("300 sequences, {uris} URIs all resolvable at head"))
}

pub fn token_single_use() -> Result<String, String> {
    let e = env();
    e.scheme("gem");
    let mut draft = vocab_registry::model::ConceptDraft::labelled("en", "Ocean");
    draft.definitions.push(vocab_registry::model::LangText::new("en", "Salt water."));
    let (c, _) = e.reg.add_concept("gem", &draft, &e.owner, None).unwrap();
    let req = UpdateRequest {
        edits: vec![Edit::Set { field: FieldPath::Definition("en".into()), value: "A body of salt water.".into() }],
        assertion: None,
        expected_version: None,
        successor_uri: None,
    };
    let UpdateOutcome::PendingConfirmation { ticket, .. } = e.reg.update_concept("gem", &c.uri, &req, &e.owner).unwrap() else {
        return Err("no ticket issued".into());
    };
    let before = e.reg.head_version("gem").unwrap();
    let barrier = Barrier::new(1000);
    let results: Vec<Result<Resolution, RegistryError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..1000)
            .map(|_| {
                s.spawn(|| {
                    barrier.wait();
                    e.reg.resolve_confirmation(&ticket, Answer::Yes)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let ok = results.iter().filter(|r| r.is_ok()).count();
    let used = results.iter().filter(|r| matches!(r, Err(RegistryError::TokenUsed))).count();
    let after = e.reg.head_version("gem").unwrap();
    if ok != 1 || used != 999 || after != before + 1 {
        return Err(format!("{ok} successes, {used} TokenUsed, head {before} -> {after}"));
    }
    Ok("1000 concurrent attempts, 1 success, 999 TokenUsed".into())
}
