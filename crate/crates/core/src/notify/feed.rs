//! Atom rendering. One entry per committed version; entry ids are
//! `urn:reg:<token>:<version>`.

use std::fmt::Write;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::engine::{render_event, ChangeEvent, EventKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedEntry {
    pub id: String,
    pub title: String,
    pub author: String,
    pub updated: DateTime<Utc>,
    pub content: String,
}

pub fn entry_id(token: &str, version: u64) -> String {
    format!("urn:reg:{token}:{version}")
}

fn kind_phrase(kind: EventKind) -> &'static str {
    match kind {
        EventKind::SchemeCreated => "scheme created",
        EventKind::SchemeMetadataUpdated => "scheme metadata updated",
        EventKind::ConceptCreated => "concept created",
        EventKind::ConceptUpdated => "concept updated",
        EventKind::ConceptDeprecated => "concept deprecated",
        EventKind::ConceptSplit => "concept split",
        EventKind::ConceptMerged => "concepts merged",
    }
}

/// The entry for one commit batch: its change listing plus the version.
pub fn batch_entry(token: &str, version: u64, events: &[ChangeEvent]) -> FeedEntry {
    let mut kinds: Vec<&str> = Vec::new();
    for ev in events {
        let p = kind_phrase(ev.kind);
        if !kinds.contains(&p) {
            kinds.push(p);
        }
    }
    let mut content = String::new();
    for ev in events {
        content.push_str(&render_event(ev));
    }
    let _ = writeln!(content, "scheme {token} is now at version {version}");
    let first = events.first();
    FeedEntry {
        id: entry_id(token, version),
        title: format!("{token} v{version}: {}", kinds.join(", ")),
        author: first.map(|e| e.author.to_string()).unwrap_or_default(),
        updated: first.map(|e| e.timestamp).unwrap_or(DateTime::<Utc>::UNIX_EPOCH),
        content,
    }
}

fn xml_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' | '\n' | '\r' => out.push(c),
            c if (c as u32) < 0x20 || c == '\u{fffe}' || c == '\u{ffff}' => out.push('\u{fffd}'),
            c => out.push(c),
        }
    }
    out
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Renders a feed. `entries` are emitted in the order given, which callers
/// make newest first. `updated` falls back to `fallback_updated` when empty.
pub fn render_atom(feed_id: &str, title: &str, fallback_updated: DateTime<Utc>, entries: &[FeedEntry]) -> String {
    let updated = entries.iter().map(|e| e.updated).max().unwrap_or(fallback_updated);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n");
    out.push_str("<feed xmlns=\"http://www.w3.org/2005/Atom\">\n");
    let _ = writeln!(out, "  <id>{}</id>", xml_text(feed_id));
    let _ = writeln!(out, "  <title>{}</title>", xml_text(title));
    let _ = writeln!(out, "  <updated>{}</updated>", stamp(updated));
    out.push_str("  <author><name>vocabulary registry</name></author>\n");
    for e in entries {
        out.push_str("  <entry>\n");
        let _ = writeln!(out, "    <id>{}</id>", xml_text(&e.id));
        let _ = writeln!(out, "    <title>{}</title>", xml_text(&e.title));
        let _ = writeln!(out, "    <updated>{}</updated>", stamp(e.updated));
        let _ = writeln!(out, "    <author><name>{}</name></author>", xml_text(&e.author));
        let _ = writeln!(out, "    <content type=\"text\">{}</content>", xml_text(&e.content));
        out.push_str("  </entry>\n");
    }
    out.push_str("</feed>\n");
    out
}
