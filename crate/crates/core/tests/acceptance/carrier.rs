use std::fs;
use std::path::Path;

use vocab_registry::kos::{self, Format, Vocabulary};
use vocab_registry::model::{AgentKind, ConceptDraft, Contact};
use vocab_registry::registry::Registry;
use vocab_registry::store::{Store, StoreConfig, LOG_FILE};
use vocab_registry::wire;

use crate::common::{self, audit, gen};
use crate::world::{Mix, World};

pub fn lossless_carrier() -> Result<String, String> {
    let v = Vocabulary::default();
    let mut r = gen::rng(0x5eed_0006);
    let mut dropped = 0;
    for i in 0..100 {
        let s = gen::scheme(&mut r, &format!("http://gen.example.org/s{i}"));
        let (nt, losses) = kos::export_state(&s, Format::Triples, &v);
        if !losses.is_empty() {
            return Err(format!("scheme {i}: triples reported losses"));
        }
        let (triples, problems) = kos::parse_ntriples(nt.as_bytes());
        if !problems.is_empty() {
            return Err(format!("scheme {i}: {problems:?}"));
        }
        let (draft, _) = kos::triples_to_scheme(&triples, &v).map_err(|e| format!("scheme {i}: {e}"))?;
        if draft.state != s {
            return Err(format!("scheme {i}: import(export(s)) != s"));
        }
        if kos::export_state(&draft.state, Format::Triples, &v).0 != nt {
            return Err(format!("scheme {i}: re-export differs"));
        }
        let (csv, losses) = kos::export_state(&s, Format::Csv, &v);
        dropped += audit::csv_losses(&s, &csv, &losses).map_err(|e| format!("scheme {i}: {e}"))?;
    }
    Ok(format!("100 schemes round-trip through triples; CSV loss reports cover all {dropped} dropped fields"))
}

/// Start offsets of the framed records in a log, found from the length
/// prefixes alone.
fn record_starts(bytes: &[u8]) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        starts.push(pos);
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4 + len + 4;
    }
    assert_eq!(pos, bytes.len(), "log ends inside a record");
    starts
}

fn open_head(root: &Path, token: &str) -> Result<(u64, String), String> {
    let cfg = StoreConfig { snapshot_interval: None, sync: false };
    let store = Store::open(root, cfg).map_err(|e| e.to_string())?;
    let handle = store.get(token).map_err(|e| e.to_string())?;
    let log = handle.lock().unwrap();
    Ok((log.head(), wire::to_line(log.head_state())))
}

pub fn crash_safety() -> Result<String, String> {
    let mut cuts = 0;
    for n in 0..50u64 {
        let (clock, sink) = common::clock_and_sink();
        let dir = tempfile::TempDir::new().unwrap();
        let reg = Registry::open_with(common::config(dir.path()), clock.clone(), sink.clone()).unwrap();
        let (owner, _) = reg.register_agent("Owner", AgentKind::Individual, vec![Contact::new("mail", "o@x.org")]).unwrap();
        let mut w = World::new(&reg, &owner.id, "gem", gen::rng(0x5eed_0007 ^ n));
        w.run(Mix::Any, 2 + n as usize % 8)?;
        let head = w.head();
        let previous = wire::to_line(&reg.snapshot_at("gem", head - 1).unwrap());
        drop(w);
        drop(reg);

        let log_path = dir.path().join("gem").join(LOG_FILE);
        let bytes = fs::read(&log_path).unwrap();
        let last = *record_starts(&bytes).last().unwrap();

        let scratch = tempfile::TempDir::new().unwrap();
        let scratch_log = scratch.path().join("gem").join(LOG_FILE);
        fs::create_dir_all(scratch_log.parent().unwrap()).unwrap();
        for cut in last..bytes.len() {
            fs::write(&scratch_log, &bytes[..cut]).unwrap();
            let got = open_head(scratch.path(), "gem").map_err(|e| format!("log {n}, cut {cut}: {e}"))?;
            if got != (head - 1, previous.clone()) {
                return Err(format!("log {n}, cut {cut}: recovered head {} instead of {}", got.0, head - 1));
            }
            if fs::read(&scratch_log).unwrap() != bytes[..last] {
                return Err(format!("log {n}, cut {cut}: recovery did not restore the committed prefix"));
            }
            // Running recovery again changes nothing.
            if open_head(scratch.path(), "gem").map_err(|e| e.to_string())? != got || fs::read(&scratch_log).unwrap() != bytes[..last] {
                return Err(format!("log {n}, cut {cut}: second recovery changed the log"));
            }
            cuts += 1;
        }

        // A recovered registry accepts the next commit at the old head's successor.
        fs::write(&log_path, &bytes[..last + 1]).unwrap();
        let reg = Registry::open_with(common::config(dir.path()), clock, sink).unwrap();
        let (_, v) = reg.add_concept("gem", &ConceptDraft::labelled("en", "After the crash"), &owner.id, None).map_err(|e| format!("log {n}: {e}"))?;
        if v != head {
            return Err(format!("log {n}: commit after recovery got version {v}, expected {head}"));
        }
    }
    Ok(format!("50 logs, {cuts} truncation points, previous head restored every time"))
}
