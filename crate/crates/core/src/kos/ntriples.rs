//! Line-oriented triple syntax:
//! `<subject-iri> <predicate-iri> (<object-iri> | "literal"(@lang)?) .`
//!
//! Literals understand `\"`, `\\`, `\n`, `\r`, `\t`, `\uXXXX` and
//! `\UXXXXXXXX`. Lines starting with `#` are comments. Blank nodes and
//! datatyped literals are rejected.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::Uri;
use crate::rdf::{Object, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseIssue {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

/// Parses a document. Lines that fail are reported and skipped; everything
/// else is kept.
pub fn parse_ntriples(text: &[u8]) -> (BTreeSet<Triple>, Vec<ParseIssue>) {
    let mut triples = BTreeSet::new();
    let mut issues = Vec::new();
    for (idx, raw) in text.split(|b| *b == b'\n').enumerate() {
        let line_no = idx + 1;
        let line = match std::str::from_utf8(raw) {
            Ok(l) => l,
            Err(_) => {
                issues.push(ParseIssue { line: line_no, message: "invalid UTF-8".into() });
                continue;
            }
        };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_triple_line(trimmed) {
            Ok(t) => {
                triples.insert(t);
            }
            Err(message) => issues.push(ParseIssue { line: line_no, message }),
        }
    }
    (triples, issues)
}

/// Canonical serialization: one line per triple, sorted bytewise, each line
/// newline-terminated.
pub fn serialize_ntriples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut lines: Vec<String> = triples.into_iter().map(|t| t.to_string()).collect();
    lines.sort();
    lines.dedup();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) -> bool {
        let before = self.pos;
        while let Some(c) = self.rest().chars().next() {
            if c == ' ' || c == '\t' {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.pos > before
    }

    fn iri(&mut self, what: &str) -> Result<Uri, String> {
        let rest = self.rest();
        if rest.starts_with("_:") {
            return Err(format!("blank nodes are not supported ({what})"));
        }
        if !rest.starts_with('<') {
            return Err(format!("expected <iri> for {what}"));
        }
        let end = rest.find('>').ok_or_else(|| format!("unterminated IRI in {what}"))?;
        let iri = &rest[1..end];
        self.pos += end + 1;
        Uri::parse(iri).map_err(|e| format!("{what}: {e}"))
    }

    fn literal(&mut self) -> Result<Object, String> {
        let mut chars = self.rest().char_indices();
        chars.next(); // opening quote
        let mut value = String::new();
        let mut closed = None;
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    closed = Some(i);
                    break;
                }
                '\\' => {
                    let (_, esc) = chars.next().ok_or("dangling escape")?;
                    match esc {
                        '"' => value.push('"'),
                        '\\' => value.push('\\'),
                        'n' => value.push('\n'),
                        'r' => value.push('\r'),
                        't' => value.push('\t'),
                        '\'' => value.push('\''),
                        'b' => value.push('\u{8}'),
                        'f' => value.push('\u{c}'),
                        'u' | 'U' => {
                            let n = if esc == 'u' { 4 } else { 8 };
                            let hex: String = (0..n).filter_map(|_| chars.next().map(|(_, h)| h)).collect();
                            let code = u32::from_str_radix(&hex, 16).map_err(|_| format!("bad \\{esc} escape"))?;
                            value.push(char::from_u32(code).ok_or("escape is not a scalar value")?);
                        }
                        other => return Err(format!("unknown escape \\{other}")),
                    }
                }
                c => value.push(c),
            }
        }
        let close = closed.ok_or("unterminated literal")?;
        self.pos += close + 1;
        let rest = self.rest();
        if rest.starts_with("^^") {
            return Err("datatyped literals are not supported".into());
        }
        let mut lang = None;
        if let Some(tag) = rest.strip_prefix('@') {
            let len = tag.find(|c: char| !(c.is_ascii_alphanumeric() || c == '-')).unwrap_or(tag.len());
            let t = &tag[..len];
            let valid = !t.is_empty()
                && t.split('-').all(|p| !p.is_empty())
                && t.split('-').next().is_some_and(|p| p.chars().all(|c| c.is_ascii_alphabetic()));
            if !valid {
                return Err(format!("bad language tag `{t}`"));
            }
            lang = Some(t.to_string());
            self.pos += 1 + len;
        }
        Ok(Object::Literal { value, lang })
    }
}

/// Parses one non-comment line.
pub fn parse_triple_line(line: &str) -> Result<Triple, String> {
    let mut c = Cursor { s: line.trim(), pos: 0 };
    let subject = c.iri("subject")?;
    if !c.skip_ws() {
        return Err("expected whitespace after subject".into());
    }
    let predicate = c.iri("predicate")?;
    if !c.skip_ws() {
        return Err("expected whitespace after predicate".into());
    }
    let object = match c.rest().chars().next() {
        Some('<') | Some('_') => Object::Iri { value: c.iri("object")? },
        Some('"') => c.literal()?,
        _ => return Err("expected <iri> or \"literal\" object".into()),
    };
    c.skip_ws();
    if c.rest() != "." {
        return Err("missing terminal ` .`".into());
    }
    Ok(Triple { subject, predicate, object })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_tagged_literal() {
        let src = br#"<http://e/a> <http://www.w3.org/2004/02/skos/core#prefLabel> "Ocean"@en ."#;
        let (t, issues) = parse_ntriples(src);
        assert!(issues.is_empty());
        assert_eq!(t.len(), 1);
        let t = t.into_iter().next().unwrap();
        assert_eq!(t.object, Object::literal("Ocean", Some("en")));
    }

    #[test]
    fn missing_terminator_reports_line_and_keeps_prior_lines() {
        let src = b"# header\n<http://e/a> <http://e/p> <http://e/b> .\n<http://e/a> <http://e/p> \"x\"\n";
        let (t, issues) = parse_ntriples(src);
        assert_eq!(t.len(), 1);
        assert_eq!(issues, vec![ParseIssue { line: 3, message: "missing terminal ` .`".into() }]);
    }

    #[test]
    fn escapes_roundtrip() {
        let t = Triple::new(
            Uri::parse("http://e/a").unwrap(),
            Uri::parse("http://e/p").unwrap(),
            Object::literal("say \"hi\"\\\nnext\tline\r", None),
        );
        let line = t.to_string();
        assert_eq!(parse_triple_line(&line).unwrap(), t);
        assert_eq!(parse_triple_line(r#"<http://e/a> <http://e/p> "café" ."#).unwrap().object, Object::literal("café", None));
    }

    #[test]
    fn rejects_blank_nodes_and_datatypes() {
        assert!(parse_triple_line("_:b1 <http://e/p> <http://e/o> .").unwrap_err().contains("blank"));
        assert!(parse_triple_line("<http://e/s> <http://e/p> _:b1 .").unwrap_err().contains("blank"));
        assert!(parse_triple_line(r#"<http://e/s> <http://e/p> "1"^^<http://x> ."#).unwrap_err().contains("datatyped"));
        assert!(parse_triple_line("<e/s> <http://e/p> <http://e/o> .").is_err());
    }

    #[test]
    fn serialization_is_sorted_bytewise() {
        let text = "<http://e/b> <http://e/p> \"2\" .\n<http://e/a/x> <http://e/p> \"1\" .\n<http://e/a> <http://e/p> \"0\" .\n";
        let (t, _) = parse_ntriples(text.as_bytes());
        let out = serialize_ntriples(&t);
        let lines: Vec<&str> = out.lines().collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        assert_eq!(lines[0], "<http://e/a/x> <http://e/p> \"1\" .");
    }
}
