use std::path::PathBuf;

use vocab_registry::engine::{apply_items, classify, diff_concepts, replay, ChangeItem, FieldPath, MaintainerAssertion};
use vocab_registry::kos::{export_state, Format};
use vocab_registry::model::{AgentKind, Concept};
use vocab_registry::registry::Registry;
use vocab_registry::wire;

use crate::common::{self, gen, u};
use crate::world::{Mix, World};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/classification")
}

fn undefined() -> Concept {
    let mut c = Concept::blank(u("http://reg.example.org/gem/7"));
    c.pref_labels.insert("en".into(), "Ocean".into());
    c.broader.insert(u("http://reg.example.org/gem/2"));
    c
}

fn defined() -> Concept {
    let mut c = undefined();
    c.definition.insert("en".into(), "A large body of salt water.".into());
    c
}

/// One case per rule code: the concept before the edit, the items and the
/// maintainer's assertion.
fn cases() -> Vec<(&'static str, Concept, Vec<ChangeItem>, Option<MaintainerAssertion>)> {
    use MaintainerAssertion::*;
    let d = defined();
    let n = undefined();
    let uri = d.uri.clone();
    let def = || FieldPath::Definition("en".into());
    vec![
        ("NS1", d.clone(), vec![ChangeItem::add(&uri, FieldPath::Broader, "http://reg.example.org/gem/3")], None),
        ("NS2", d.clone(), vec![ChangeItem::modify(&uri, def(), "A large body of salt water.", "A large body of saltwater.")], Some(Clarification)),
        ("NS3", n.clone(), vec![ChangeItem::add(&uri, def(), "A large body of salt water.")], None),
        ("NS4", d.clone(), vec![ChangeItem::modify(&uri, FieldPath::Status, "proposed", "approved")], None),
        ("NS5", d.clone(), vec![ChangeItem::add(&uri, FieldPath::Note, "Used in the earth science collection.")], None),
        ("NS6", d.clone(), vec![ChangeItem::modify(&uri, FieldPath::PrefLabel("en".into()), "Ocean", "Oceans")], None),
        ("S1", d.clone(), vec![ChangeItem::add(&uri, FieldPath::ReplacedBy, "http://reg.example.org/gem/8")], None),
        ("S2", d.clone(), vec![ChangeItem::modify(&uri, def(), "A large body of salt water.", "Any body of water.")], Some(MeaningChange)),
        ("S3", n.clone(), vec![ChangeItem::modify(&uri, FieldPath::Broader, "http://reg.example.org/gem/2", "http://reg.example.org/gem/3")], None),
        ("NC1", d.clone(), vec![ChangeItem::modify(&uri, def(), "A large body of salt water.", "Any body of water.")], None),
        ("NC2", d, vec![ChangeItem::remove(&uri, FieldPath::Broader, "http://reg.example.org/gem/2")], None),
    ]
}

/// Set `BLESS=1` to rewrite the golden files from the current output.
pub fn classification_table() -> Result<String, String> {
    let dir = golden_dir();
    let bless = std::env::var_os("BLESS").is_some();
    let mut mismatches = Vec::new();
    let all = cases();
    for (code, before, items, assertion) in &all {
        // The items must actually turn `before` into something.
        let mut after = before.clone();
        apply_items(&mut after, items).map_err(|e| format!("{code}: {e}"))?;
        let k = classify(items, before, *assertion).map_err(|e| format!("{code}: {e}"))?;
        let got = format!("{}\n", wire::to_line(&k));
        let path = dir.join(format!("{code}.json"));
        if bless {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &got).unwrap();
        }
        let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        if got != want {
            mismatches.push(format!("{code}: got {got}"));
        }
    }
    if !mismatches.is_empty() {
        return Err(mismatches.join("; "));
    }
    Ok(format!("{} rule codes match their golden files byte for byte", all.len()))
}

pub fn patch_round_trip() -> Result<String, String> {
    let pool = gen::uris("http://gen.example.org/s", 8);
    let mut r = gen::rng(0x5eed_0004);
    let mut items = 0;
    for i in 0..10_000 {
        let uri = &pool[i % pool.len()];
        let a = gen::concept(&mut r, uri, &pool);
        let b = gen::concept(&mut r, uri, &pool);
        if !diff_concepts(&a, &a).unwrap().is_empty() {
            return Err(format!("pair {i}: diff(a, a) is not empty"));
        }
        let d = diff_concepts(&a, &b).unwrap();
        let mut patched = a.clone();
        apply_items(&mut patched, &d).map_err(|e| format!("pair {i}: {e}"))?;
        if patched != b {
            return Err(format!("pair {i}: apply(diff(a, b), a) != b"));
        }
        items += d.len();
    }
    Ok(format!("10000 pairs, {items} items, 0 violations"))
}

fn canonical(reg: &Registry, m: &vocab_registry::engine::Materialized) -> String {
    format!("{}{}", wire::to_line(m), export_state(&m.state, Format::Triples, reg.vocabulary()).0)
}

pub fn replay_determinism() -> Result<String, String> {
    let mut versions = 0;
    for h in 0..100u64 {
        let dir = tempfile::TempDir::new().unwrap();
        let (clock, sink) = common::clock_and_sink();
        let mut cfg = common::config(dir.path());
        cfg.store.snapshot_interval = Some(1 + h % 7);
        let cached = Registry::open_with(cfg.clone(), clock.clone(), sink.clone()).unwrap();
        let (owner, _) = cached.register_agent("Owner", AgentKind::Individual, vec![vocab_registry::model::Contact::new("mail", "o@x.org")]).unwrap();
        let mut w = World::new(&cached, &owner.id, "hist", gen::rng(0x5eed_0005 ^ h));
        w.run(Mix::Any, 10 + (h as usize % 20))?;
        let head = w.head();
        let events = cached.history("hist", None).unwrap();
        drop(w);
        drop(cached);

        // Reopened with snapshots on disk, and with caching turned off.
        let cached = Registry::open_with(cfg.clone(), clock.clone(), sink.clone()).unwrap();
        cfg.store.snapshot_interval = None;
        let plain_dir = tempfile::TempDir::new().unwrap();
        copy_dir(dir.path(), plain_dir.path());
        for f in std::fs::read_dir(plain_dir.path().join("hist")).unwrap() {
            let f = f.unwrap();
            if f.file_name().to_string_lossy().starts_with("snap-") {
                std::fs::remove_file(f.path()).unwrap();
            }
        }
        cfg.data_dir = plain_dir.path().to_path_buf();
        let plain = Registry::open_with(cfg, clock.clone(), sink.clone()).unwrap();

        for v in 1..=head {
            let prefix: Vec<_> = events.iter().filter(|ev| ev.version <= v).cloned().collect();
            let naive = canonical(&cached, &replay(&prefix).map_err(|e| format!("history {h} v{v}: {e}"))?);
            for (label, reg) in [("cached", &cached), ("uncached", &plain)] {
                let m = reg.snapshot_at("hist", v).map_err(|e| format!("history {h} v{v}: {e}"))?;
                let first = canonical(reg, &m);
                let again = canonical(reg, &reg.snapshot_at("hist", v).unwrap());
                if first != naive || again != first {
                    return Err(format!("history {h}: {label} materialization differs from replay at v{v}"));
                }
            }
            versions += 1;
        }
    }
    Ok(format!("100 histories, {versions} versions byte-equal to naive replay"))
}

fn copy_dir(from: &std::path::Path, to: &std::path::Path) {
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            std::fs::create_dir_all(&target).unwrap();
            copy_dir(&entry.path(), &target);
        } else if entry.file_name() != ".lock" {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}
