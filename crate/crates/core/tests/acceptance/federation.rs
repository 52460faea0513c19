use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Duration};
use rand::rngs::StdRng;
use rand::Rng;
use reqwest::Client;
use vocab_registry::engine::{ChangeOp, SchemeDiff};
use vocab_registry::kos::{export_state, Format, Vocabulary};
use vocab_registry::model::{Concept, SchemeState, StatusTerm, Uri};
use vocab_registry::notify::{Channel, Granularity, Scope};
use vocab_registry::registry::{IngestOutcome, Registry};
use vocab_registry::service::{harvest, router, AppState};

use crate::common::{self, env, gen};
use crate::world::{Mix, World};

/// Entry ids and `updated` stamps of an Atom document, in document order.
fn entries(xml: &str) -> Result<Vec<(String, String)>, String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| format!("feed is not XML: {e}"))?;
    let child = |n: roxmltree::Node, name: &str| {
        n.children().find(|c| c.tag_name().name() == name).and_then(|c| c.text()).map(str::to_string).unwrap_or_default()
    };
    Ok(doc
        .root_element()
        .children()
        .filter(|n| n.tag_name().name() == "entry")
        .map(|n| (child(n, "id"), child(n, "updated")))
        .collect())
}

/// The feed must list exactly `versions`, newest first, with non-increasing
/// timestamps.
fn check_feed(xml: &str, token: &str, versions: impl DoubleEndedIterator<Item = u64>) -> Result<(), String> {
    let got = entries(xml)?;
    let want: Vec<String> = versions.rev().map(|v| format!("urn:reg:{token}:{v}")).collect();
    let ids: Vec<&String> = got.iter().map(|(id, _)| id).collect();
    if ids != want.iter().collect::<Vec<_>>() {
        return Err(format!("entry ids {ids:?}, expected {want:?}"));
    }
    let stamps: Vec<DateTime<chrono::FixedOffset>> = got
        .iter()
        .map(|(_, u)| DateTime::parse_from_rfc3339(u).map_err(|e| format!("updated `{u}`: {e}")))
        .collect::<Result<_, _>>()?;
    if stamps.windows(2).any(|w| w[0] < w[1]) {
        return Err(format!("updated stamps out of order: {stamps:?}"));
    }
    Ok(())
}

pub fn feed_exactness() -> Result<String, String> {
    let e = env();
    let reader = e.agent("reader");
    e.scheme("gem");
    let sub = e.reg.subscribe(&reader, Scope::Scheme("gem".into()), Channel::Feed, Granularity::EveryCommit).unwrap();
    let mut r = gen::rng(0x5eed_0008);
    for k in 1..=50u64 {
        if k > 1 {
            // Some commits share a timestamp so ordering cannot lean on the clock.
            if r.random_bool(0.7) {
                e.clock.advance(Duration::seconds(r.random_range(1..100)));
            }
            e.add("gem", &gen::text(&mut r));
        }
        let feed = e.reg.render_feed(&Scope::Scheme("gem".into()), None).unwrap();
        check_feed(&feed, "gem", 1..=k).map_err(|m| format!("after {k} commits: {m}"))?;
        let delivered = e.reg.subscription_feed(&sub.id).unwrap();
        check_feed(&delivered, "gem", 2..=k).map_err(|m| format!("subscription after {k} commits: {m}"))?;
    }
    Ok("feeds after 1..=50 commits list exactly those commits, newest first".into())
}

fn registry_at(base: &str) -> (tempfile::TempDir, Arc<Registry>) {
    let dir = tempfile::TempDir::new().unwrap();
    let (clock, sink) = common::clock_and_sink();
    let mut cfg = common::config(dir.path());
    cfg.base_uri = base.into();
    cfg.public_url = base.into();
    (dir, Arc::new(Registry::open_with(cfg, clock, sink).unwrap()))
}

pub fn harvest_convergence() -> Result<String, String> {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let (_a_dir, a) = registry_at("http://a.example.org");
    let (_b_dir, b) = registry_at("http://b.example.org");
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let peer = format!("http://{}", listener.local_addr().unwrap());
    let app = router(AppState::new(a.clone()));
    rt.spawn(async move { axum::serve(listener, app).await.unwrap() });
    let client = Client::new();

    let (owner, _) = a.register_agent("Owner", vocab_registry::model::AgentKind::Individual, vec![vocab_registry::model::Contact::new("mail", "o@x.org")]).map_err(|e| e.to_string())?;
    let mut w = World::new(&a, &owner.id, "gem", gen::rng(0x5eed_0009));
    let mut rounds = Vec::new();
    // Version 1 is the scheme's creation; harvest after 10 and 20 further commits.
    for (round, target) in [11, 21].into_iter().enumerate() {
        while w.head() < target {
            w.step(Mix::Any)?;
        }
        let report = rt.block_on(harvest(&b, &client, &peer)).map_err(|e| format!("round {round}: {e}"))?;
        if report.updated.is_empty() {
            return Err(format!("round {round}: nothing harvested"));
        }
        for (token, copy) in b.harvest_baseline(&peer) {
            let (mine, _, _) = b.export(&copy.id, None, Format::Triples).map_err(|e| e.to_string())?;
            let theirs = rt.block_on(async {
                client.get(format!("{peer}/schemes/{token}?format=triples")).send().await.unwrap().text().await.unwrap()
            });
            if mine != theirs {
                return Err(format!("round {round}: copy of {token} differs from the peer's export"));
            }
            if copy.source_version != Some(a.head_version(&token).unwrap()) {
                return Err(format!("round {round}: copy of {token} records version {:?}", copy.source_version));
            }
        }
        let again = rt.block_on(harvest(&b, &client, &peer)).map_err(|e| e.to_string())?;
        if !again.updated.is_empty() {
            return Err(format!("round {round}: repeat harvest updated {:?}", again.updated));
        }
        rounds.push(w.head() - 1);
    }
    Ok(format!("copies byte-equal to the peer after {rounds:?} commits; repeat harvests update nothing"))
}

/// One random edit to a non-hosted snapshot.
fn mutate(r: &mut StdRng, s: &mut SchemeState, base: &str, next: &mut usize) {
    let uris: Vec<Uri> = s.concepts.keys().cloned().collect();
    let pick = |r: &mut StdRng| uris[r.random_range(0..uris.len())].clone();
    let mut g = gen::rng(r.random());
    match r.random_range(0..6) {
        0 if uris.len() > 1 => {
            s.concepts.remove(&pick(r));
        }
        1 => {
            *next += 1;
            let u = Uri::parse(&format!("{base}/{next}")).unwrap();
            s.concepts.insert(u.clone(), gen::concept(&mut g, &u, &uris));
        }
        2 => {
            let u = pick(r);
            s.concepts.get_mut(&u).unwrap().status = StatusTerm::Deprecated;
        }
        3 => {
            let u = pick(r);
            s.concepts.insert(u.clone(), gen::concept(&mut g, &u, &uris));
        }
        4 => s.title = gen::text(&mut g),
        _ => {
            let u = pick(r);
            let c = s.concepts.get_mut(&u).unwrap();
            c.pref_labels.insert("en".into(), gen::text(&mut g));
        }
    }
}

type Fact = (Uri, String, String);

fn facts(uri: &Uri, c: Option<&Concept>) -> BTreeSet<Fact> {
    let c = c.cloned().unwrap_or_else(|| Concept::blank(uri.clone()));
    gen::fields(&c).into_iter().map(|(f, v)| (uri.clone(), f, v)).collect()
}

/// Differences computed field by field from the two states.
fn expected(before: &SchemeState, after: &SchemeState) -> (BTreeSet<Uri>, BTreeSet<Uri>, BTreeSet<Uri>, BTreeSet<Fact>, BTreeSet<Fact>) {
    let (b, a): (BTreeSet<&Uri>, BTreeSet<&Uri>) = (before.concepts.keys().collect(), after.concepts.keys().collect());
    let created = a.difference(&b).map(|u| (*u).clone()).collect();
    let removed = b.difference(&a).map(|u| (*u).clone()).collect();
    let deprecated = after
        .concepts
        .values()
        .filter(|c| c.status == StatusTerm::Deprecated)
        .filter(|c| before.concepts.get(&c.uri).is_none_or(|o| o.status != StatusTerm::Deprecated))
        .map(|c| c.uri.clone())
        .collect();
    let (mut gone, mut added) = (BTreeSet::new(), BTreeSet::new());
    for u in a.union(&b) {
        let (fb, fa) = (facts(u, before.concepts.get(*u)), facts(u, after.concepts.get(*u)));
        gone.extend(fb.difference(&fa).cloned());
        added.extend(fa.difference(&fb).cloned());
    }
    (created, removed, deprecated, gone, added)
}

fn reported(d: &SchemeDiff) -> (BTreeSet<Fact>, BTreeSet<Fact>) {
    let (mut gone, mut added) = (BTreeSet::new(), BTreeSet::new());
    for i in &d.items {
        let field = i.field.to_string();
        if matches!(i.op, ChangeOp::Remove | ChangeOp::Modify) {
            gone.insert((i.concept.clone(), field.clone(), i.old.clone().unwrap_or_default()));
        }
        if matches!(i.op, ChangeOp::Add | ChangeOp::Modify) {
            added.insert((i.concept.clone(), field, i.new.clone().unwrap_or_default()));
        }
    }
    (gone, added)
}

pub fn non_hosted_ingestion() -> Result<String, String> {
    let e = env();
    let v = Vocabulary::default();
    let mut r = gen::rng(0x5eed_000a);
    let mut stored = 0;
    for series in 0..20 {
        let base = format!("http://lcsh{series}.example.org/s");
        let source = format!("http://lcsh{series}.example.org");
        let mut state = gen::scheme(&mut r, &base);
        let mut next = state.concepts.len() + 100;
        let mut previous = SchemeState::new(state.uri.clone(), "", "");
        let mut seq = 0;
        let mut id = None;
        for step in 0..10 {
            if step > 0 {
                for _ in 0..r.random_range(1..4) {
                    mutate(&mut r, &mut state, &base, &mut next);
                }
            }
            let payload = export_state(&state, Format::Triples, &v).0;
            let at = format!("series {series} step {step}");
            let out = e.reg.ingest_snapshot(&source, None, payload.as_bytes()).map_err(|err| format!("{at}: {err}"))?;
            let (got_id, diff) = match out {
                IngestOutcome::NoChange { .. } if previous == state => continue,
                IngestOutcome::Stored { id, seq: s, diff } if s == seq + 1 => (id, diff),
                other => return Err(format!("{at}: unexpected {other:?}")),
            };
            if id.get_or_insert_with(|| got_id.clone()) != &got_id {
                return Err(format!("{at}: copy id changed to {got_id}"));
            }
            let (created, removed, deprecated, gone, added) = expected(&previous, &state);
            if diff.created != created || diff.removed != removed || diff.deprecated != deprecated {
                return Err(format!("{at}: concept sets differ: {diff:?}"));
            }
            if reported(&diff) != (gone, added) {
                return Err(format!("{at}: change items do not match the field differences"));
            }
            if e.reg.copy_at(&got_id, None).unwrap().state != state {
                return Err(format!("{at}: stored copy differs from the snapshot"));
            }
            seq += 1;
            stored += 1;
            previous = state.clone();
        }
        // Re-sending the latest snapshot stores nothing.
        let payload = export_state(&state, Format::Triples, &v).0;
        match e.reg.ingest_snapshot(&source, None, payload.as_bytes()).map_err(|err| err.to_string())? {
            IngestOutcome::NoChange { seq: s, .. } if s == seq => {}
            other => return Err(format!("series {series}: repeat ingest gave {other:?}")),
        }
    }
    Ok(format!("20 series, {stored} sequenced copies, diffs match field-by-field expectations"))
}
