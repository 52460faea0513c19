//! Plain-text change listings: one line per item,
//! `<uri> <field> <op> <old> -> <new>`. Values are JSON string literals;
//! an absent value is `-`.

use super::{ChangeEvent, ChangeItem, SchemeDiff};

pub fn render_value(v: Option<&str>) -> String {
    match v {
        Some(s) => serde_json::to_string(s).expect("strings always serialize"),
        None => "-".to_string(),
    }
}

pub fn render_item(item: &ChangeItem) -> String {
    format!(
        "{} {} {} {} -> {}",
        item.concept,
        item.field,
        item.op.as_str(),
        render_value(item.old.as_deref()),
        render_value(item.new.as_deref())
    )
}

/// Header line for the event followed by its item lines.
pub fn render_event(ev: &ChangeEvent) -> String {
    let class = ev
        .classification
        .as_ref()
        .map(|c| {
            let reasons: Vec<String> = c.reasons.iter().map(|r| r.to_string()).collect();
            format!(" {:?}[{}]", c.outcome, reasons.join(","))
        })
        .unwrap_or_default();
    let mut out = format!(
        "# v{} seq {} {} by {} {:?}{}\n",
        ev.version,
        ev.seq,
        ev.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        ev.author,
        ev.kind,
        class
    );
    for item in &ev.items {
        out.push_str(&render_item(item));
        out.push('\n');
    }
    out
}

pub fn render_diff(diff: &SchemeDiff) -> String {
    let mut out = String::new();
    for m in &diff.metadata {
        out.push_str(&format!(
            "<scheme> {} {} {} -> {}\n",
            m.field,
            m.op.as_str(),
            render_value(m.old.as_deref()),
            render_value(m.new.as_deref())
        ));
    }
    for item in &diff.items {
        out.push_str(&render_item(item));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::FieldPath;
    use crate::model::Uri;

    #[test]
    fn item_line_format() {
        let u = Uri::parse("http://reg.example.org/gem/1").unwrap();
        let item = ChangeItem::modify(&u, FieldPath::PrefLabel("en".into()), "Sea", "Ocean \"deep\"");
        assert_eq!(render_item(&item), r#"http://reg.example.org/gem/1 pref_label(en) modify "Sea" -> "Ocean \"deep\"""#);
        let item = ChangeItem::add(&u, FieldPath::Broader, "http://reg.example.org/gem/2");
        assert_eq!(render_item(&item), r#"http://reg.example.org/gem/1 broader add - -> "http://reg.example.org/gem/2""#);
    }
}
