//! Flat key-value configuration text, organized in `[section]` blocks.
//!
//! The format is deliberately tiny:
//!
//! ```text
//! # comment
//! [experiment]
//! env = heavenhell-3
//! seeds = 1,2,3
//! ```
//!
//! * every non-blank, non-comment line is either `[section]` or `key = value`;
//! * keys live inside a section (a bare `key = value` before any header is an
//!   error);
//! * section names and keys are unique — duplicates are errors, so a typo'd
//!   override never silently shadows an earlier line;
//! * serialization preserves insertion order, making round-trips byte-stable.
//!
//! Consumers read a section through [`SectionReader`], which records every
//! key it was asked for and then rejects leftovers via
//! [`SectionReader::finish`] — unknown keys are errors, not warnings.

use crate::error::{HarnessError, Result};
use std::fmt::Display;

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    entries: Vec<(String, String)>,
}

/// An ordered collection of named sections of `key = value` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDoc {
    sections: Vec<Section>,
}

impl ConfigDoc {
    pub fn new() -> Self {
        ConfigDoc::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = ConfigDoc::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim();
                if name.is_empty() {
                    return Err(HarnessError::config(format!(
                        "line {lineno}: empty section name"
                    )));
                }
                if doc.find(name).is_some() {
                    return Err(HarnessError::config(format!(
                        "line {lineno}: duplicate section [{name}]"
                    )));
                }
                doc.sections.push(Section { name: name.to_string(), entries: Vec::new() });
            } else if let Some((key, value)) = line.split_once('=') {
                let key = key.trim();
                let value = value.trim();
                if key.is_empty() {
                    return Err(HarnessError::config(format!("line {lineno}: empty key")));
                }
                let section = doc.sections.last_mut().ok_or_else(|| {
                    HarnessError::config(format!(
                        "line {lineno}: `{key}` appears before any [section] header"
                    ))
                })?;
                if section.entries.iter().any(|(k, _)| k == key) {
                    return Err(HarnessError::config(format!(
                        "line {lineno}: duplicate key `{key}` in section [{}]",
                        section.name
                    )));
                }
                section.entries.push((key.to_string(), value.to_string()));
            } else {
                return Err(HarnessError::config(format!(
                    "line {lineno}: expected `[section]` or `key = value`, got `{line}`"
                )));
            }
        }
        Ok(doc)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("[{}]\n", section.name));
            for (key, value) in &section.entries {
                out.push_str(&format!("{key} = {value}\n"));
            }
        }
        out
    }

    fn find(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Appends `key = value`, creating the section when absent. Panics on a
    /// duplicate key — documents are built programmatically, so that is a
    /// caller bug rather than user input.
    pub fn push(&mut self, section: &str, key: &str, value: impl Display) {
        let sec = match self.sections.iter_mut().find(|s| s.name == section) {
            Some(s) => s,
            None => {
                self.sections.push(Section { name: section.to_string(), entries: Vec::new() });
                self.sections.last_mut().unwrap()
            }
        };
        assert!(
            !sec.entries.iter().any(|(k, _)| k == key),
            "duplicate key `{key}` pushed into [{section}]"
        );
        sec.entries.push((key.to_string(), value.to_string()));
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().map(|s| s.name.as_str())
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.find(name).is_some()
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.find(section)?
            .entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// A reader over one section that insists every key gets consumed.
    pub fn read_section(&self, name: &str) -> Result<SectionReader<'_>> {
        let section = self
            .find(name)
            .ok_or_else(|| HarnessError::config(format!("missing section [{name}]")))?;
        Ok(SectionReader { section, taken: vec![false; section.entries.len()] })
    }

    /// Errors unless the document's sections are exactly `expected` (any
    /// order) — the section-level analogue of unknown-key rejection.
    pub fn expect_sections(&self, expected: &[&str]) -> Result<()> {
        for name in expected {
            if !self.has_section(name) {
                return Err(HarnessError::config(format!("missing section [{name}]")));
            }
        }
        for section in &self.sections {
            if !expected.contains(&section.name.as_str()) {
                return Err(HarnessError::config(format!(
                    "unknown section [{}]",
                    section.name
                )));
            }
        }
        Ok(())
    }
}

/// Borrowing reader for one section; see [`ConfigDoc::read_section`].
pub struct SectionReader<'a> {
    section: &'a Section,
    taken: Vec<bool>,
}

impl<'a> SectionReader<'a> {
    pub fn name(&self) -> &str {
        &self.section.name
    }

    pub fn get(&mut self, key: &str) -> Option<&'a str> {
        for (i, (k, v)) in self.section.entries.iter().enumerate() {
            if k == key {
                self.taken[i] = true;
                return Some(v.as_str());
            }
        }
        None
    }

    pub fn require(&mut self, key: &str) -> Result<&'a str> {
        self.get(key).ok_or_else(|| {
            HarnessError::config(format!(
                "missing key `{key}` in section [{}]",
                self.section.name
            ))
        })
    }

    /// Errors if any key in the section was never requested.
    pub fn finish(self) -> Result<()> {
        for (i, (key, _)) in self.section.entries.iter().enumerate() {
            if !self.taken[i] {
                return Err(HarnessError::config(format!(
                    "unknown key `{key}` in section [{}]",
                    self.section.name
                )));
            }
        }
        Ok(())
    }
}

// ── Typed parsing helpers ─────────────────────────────────────────────────

fn parse_err(key: &str, value: &str, wanted: &str) -> HarnessError {
    HarnessError::config(format!("key `{key}`: expected {wanted}, got `{value}`"))
}

pub fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| parse_err(key, value, "a number"))
}

pub fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse().map_err(|_| parse_err(key, value, "a non-negative integer"))
}

pub fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| parse_err(key, value, "a non-negative integer"))
}

pub fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(parse_err(key, value, "`true` or `false`")),
    }
}

/// Comma-separated integer list, e.g. `1,2,3`.
pub fn parse_u64_list(key: &str, value: &str) -> Result<Vec<u64>> {
    value
        .split(',')
        .map(|part| parse_u64(key, part.trim()))
        .collect()
}

/// Comma-separated float list, e.g. `0.0001,0.0003,0.001`.
pub fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| parse_f64(key, part.trim()))
        .collect()
}

pub fn join_list<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    // ── Parsing ───────────────────────────────────────────────────────────

    #[test]
    fn parses_sections_comments_and_blank_lines() {
        let doc = ConfigDoc::parse(
            "# a comment\n\n[alpha]\nx = 1\ny = two words\n\n[beta]\nz = 3\n",
        )
        .unwrap();
        assert_eq!(doc.get("alpha", "x"), Some("1"));
        assert_eq!(doc.get("alpha", "y"), Some("two words"));
        assert_eq!(doc.get("beta", "z"), Some("3"));
        assert_eq!(doc.section_names().collect::<Vec<_>>(), vec!["alpha", "beta"]);
    }

    #[test]
    fn rejects_keys_outside_sections_duplicates_and_junk() {
        assert!(ConfigDoc::parse("x = 1\n").is_err());
        assert!(ConfigDoc::parse("[a]\nx = 1\nx = 2\n").is_err());
        assert!(ConfigDoc::parse("[a]\n[a]\n").is_err());
        assert!(ConfigDoc::parse("[a]\nnot a pair\n").is_err());
        assert!(ConfigDoc::parse("[]\n").is_err());
    }

    #[test]
    fn serialization_round_trips_byte_for_byte() {
        let mut doc = ConfigDoc::new();
        doc.push("experiment", "env", "goodbad");
        doc.push("experiment", "seeds", "1,2,3");
        doc.push("train", "lr-actor", 0.001);
        let text = doc.serialize();
        let reparsed = ConfigDoc::parse(&text).unwrap();
        assert_eq!(reparsed, doc);
        assert_eq!(reparsed.serialize(), text);
    }

    // ── Unknown-key rejection ─────────────────────────────────────────────

    #[test]
    fn a_leftover_key_is_an_error() {
        let doc = ConfigDoc::parse("[s]\nknown = 1\ntypo = 2\n").unwrap();
        let mut reader = doc.read_section("s").unwrap();
        assert_eq!(reader.get("known"), Some("1"));
        let err = reader.finish().unwrap_err();
        assert!(err.to_string().contains("typo"), "{err}");
    }

    #[test]
    fn consuming_every_key_finishes_cleanly() {
        let doc = ConfigDoc::parse("[s]\na = 1\nb = 2\n").unwrap();
        let mut reader = doc.read_section("s").unwrap();
        reader.get("a");
        assert_eq!(reader.require("b").unwrap(), "2");
        reader.finish().unwrap();
    }

    #[test]
    fn unexpected_sections_are_rejected() {
        let doc = ConfigDoc::parse("[a]\nx = 1\n[b]\ny = 2\n").unwrap();
        doc.expect_sections(&["a", "b"]).unwrap();
        assert!(doc.expect_sections(&["a"]).is_err());
        assert!(doc.expect_sections(&["a", "b", "c"]).is_err());
    }

    // ── Typed helpers ─────────────────────────────────────────────────────

    #[test]
    fn typed_parsers_accept_and_reject() {
        assert_eq!(parse_f64("k", "0.0003").unwrap(), 3e-4);
        assert_eq!(parse_u64_list("k", "1, 2,3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_f64_list("k", "0.1,1").unwrap(), vec![0.1, 1.0]);
        assert_eq!(parse_bool("k", "true").unwrap(), true);
        assert!(parse_bool("k", "yes").is_err());
        assert!(parse_u64("k", "-3").is_err());
        assert!(parse_f64("k", "fast").is_err());
    }

    #[test]
    fn float_lists_round_trip_through_display() {
        let rates = [1e-4, 3e-4, 1e-3];
        let joined = join_list(&rates);
        assert_eq!(parse_f64_list("k", &joined).unwrap(), rates);
    }
}
