//! Seeded generators for concepts, schemes and edit sequences.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use vocab_registry::model::{Concept, SchemeState, StatusTerm, Uri};
use vocab_registry::rdf::{Object, Triple};

pub const LANGS: [&str; 3] = ["en", "fr", "de"];
const WORDS: [&str; 12] = [
    "ocean", "lake", "river", "delta", "Earth", "salt \"water\"", "fjord", "tide", "reef", "gulf", "bay\\inlet", "sea level",
];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn text(r: &mut StdRng) -> String {
    let n = r.random_range(1..=3);
    (0..n).map(|_| *WORDS.choose(r).unwrap()).collect::<Vec<_>>().join(" ")
}

fn langs(r: &mut StdRng) -> Vec<&'static str> {
    LANGS.iter().copied().filter(|_| r.random_bool(0.5)).collect()
}

fn lang_map(r: &mut StdRng) -> BTreeMap<String, String> {
    langs(r).into_iter().map(|l| (l.to_string(), text(r))).collect()
}

fn subset(r: &mut StdRng, pool: &[Uri], p: f64) -> BTreeSet<Uri> {
    pool.iter().filter(|_| r.random_bool(p)).cloned().collect()
}

pub fn extra(r: &mut StdRng, subject: &Uri) -> Triple {
    let p = Uri::parse(&format!("http://extra.example.org/p/{}", r.random_range(0..4))).unwrap();
    let o = if r.random_bool(0.5) {
        Object::iri(Uri::parse(&format!("http://extra.example.org/o/{}", r.random_range(0..6))).unwrap())
    } else {
        Object::literal(text(r), if r.random_bool(0.5) { Some(*LANGS.choose(r).unwrap()) } else { None })
    };
    Triple::new(subject.clone(), p, o)
}

/// Any concept at all; fields drawn independently. Used where no scheme
/// invariants apply.
pub fn concept(r: &mut StdRng, uri: &Uri, pool: &[Uri]) -> Concept {
    let mut c = Concept::blank(uri.clone());
    c.pref_labels = lang_map(r);
    for l in langs(r) {
        let n = r.random_range(1..=3);
        c.alt_labels.insert(l.into(), (0..n).map(|_| text(r)).collect());
    }
    c.definition = lang_map(r);
    c.scope_note = lang_map(r);
    c.broader = subset(r, pool, 0.2);
    c.related = subset(r, pool, 0.2);
    c.replaces = subset(r, pool, 0.1);
    c.replaced_by = subset(r, pool, 0.1);
    c.notes = (0..r.random_range(0..3)).map(|_| text(r)).collect();
    c.extras = (0..r.random_range(0..3)).map(|_| extra(r, uri)).collect();
    c.status = *StatusTerm::ALL.choose(r).unwrap();
    c.numeric_id = match r.random_range(0..3) {
        0 => None,
        1 => Some(r.random_range(1..1000)),
        _ => uri.as_str().rsplit('/').next().and_then(|s| s.parse().ok()),
    };
    c
}

pub fn uris(base: &str, n: usize) -> Vec<Uri> {
    (1..=n).map(|i| Uri::parse(&format!("{base}/{i}")).unwrap()).collect()
}

/// A scheme whose concepts are arbitrary but reference only each other or
/// outside URIs. Not necessarily valid for hosting.
pub fn scheme(r: &mut StdRng, base: &str) -> SchemeState {
    let uri = Uri::parse(base).unwrap();
    let mut s = SchemeState::new(uri.clone(), text(r), if r.random_bool(0.5) { text(r) } else { String::new() });
    s.extras = (0..r.random_range(0..2)).map(|_| extra(r, &uri)).collect();
    let n = r.random_range(1..12);
    let mut pool = uris(base, n);
    pool.push(Uri::parse("http://elsewhere.example.org/x").unwrap());
    for u in &pool[..n] {
        s.concepts.insert(u.clone(), concept(r, u, &pool));
    }
    s
}

/// Every (field path, value) pair a concept holds, enumerated field by field.
pub fn fields(c: &Concept) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for (l, v) in &c.pref_labels {
        out.insert((format!("pref_label({l})"), v.clone()));
    }
    for (l, vs) in &c.alt_labels {
        for v in vs {
            out.insert((format!("alt_label({l})"), v.clone()));
        }
    }
    for (l, v) in &c.definition {
        out.insert((format!("definition({l})"), v.clone()));
    }
    for (l, v) in &c.scope_note {
        out.insert((format!("scope_note({l})"), v.clone()));
    }
    let uris = [("broader", &c.broader), ("related", &c.related), ("replaces", &c.replaces), ("replaced_by", &c.replaced_by)];
    for (name, set) in uris {
        for u in set {
            out.insert((name.into(), u.to_string()));
        }
    }
    for n in &c.notes {
        out.insert(("note".into(), n.clone()));
    }
    for t in &c.extras {
        out.insert(("extra".into(), t.to_string()));
    }
    out.insert(("status".into(), c.status.as_str().into()));
    if let Some(n) = c.numeric_id {
        out.insert(("numeric_id".into(), n.to_string()));
    }
    out
}
