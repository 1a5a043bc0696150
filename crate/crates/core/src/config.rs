//! Flat `key = value` text format with `[section]` headers.
//!
//! ```text
//! # comment
//! [scenario]
//! id = heat_1d
//! p = 2
//! ```
//!
//! Keys before the first header belong to the empty section. Values run to
//! the end of the line (inline `#` starts a comment).

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parsed document, entries kept in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatConfig {
    entries: Vec<Entry>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    msg: format!("unterminated section header `{body}`"),
                })?;
                let name = name.trim();
                if name.is_empty() || !name.chars().all(is_ident_char) {
                    return Err(Error::Config {
                        line,
                        msg: format!("invalid section name `{name}`"),
                    });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected `key = value`, found `{body}`"),
            })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(is_ident_char) {
                return Err(Error::Config {
                    line,
                    msg: format!("invalid key `{key}`"),
                });
            }
            if let Some(prev) = entries
                .iter()
                .find(|e| e.section == section && e.key == key)
            {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
            entries.push(Entry {
                section: section.clone(),
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        let value = value.into();
        if let Some(e) = self
            .entries
            .iter_mut()
            .find(|e| e.section == section && e.key == key)
        {
            e.value = value;
        } else {
            self.entries.push(Entry {
                section: section.into(),
                key: key.into(),
                value,
                line: 0,
            });
        }
    }

    /// Reject any key not listed for its section.
    pub fn check_schema(&self, schema: &[(&str, &[&str])]) -> Result<()> {
        for e in &self.entries {
            let Some((_, keys)) = schema.iter().find(|(s, _)| *s == e.section) else {
                return Err(Error::Config {
                    line: e.line,
                    msg: format!("unknown section `[{}]`", e.section),
                });
            };
            if !keys.contains(&e.key.as_str()) {
                return Err(Error::Config {
                    line: e.line,
                    msg: format!("unknown key `{}` in section `[{}]`", e.key, e.section),
                });
            }
        }
        Ok(())
    }

    pub fn parse_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.parse_with(section, key, |v| v.parse::<f64>().ok())
    }

    pub fn parse_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.parse_with(section, key, |v| v.parse::<usize>().ok())
    }

    pub fn parse_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.parse_with(section, key, |v| v.parse::<u64>().ok())
    }

    pub fn parse_with<T>(
        &self,
        section: &str,
        key: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).ok_or_else(|| Error::Config {
                line: e.line,
                msg: format!("invalid value `{}` for `{}`", e.value, e.key),
            }),
        }
    }

    /// Serialize back to text, grouped by section in first-seen order.
    pub fn render(&self) -> String {
        let mut sections: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !sections.contains(&e.section.as_str()) {
                sections.push(&e.section);
            }
        }
        let mut out = String::new();
        for s in sections {
            if !s.is_empty() {
                if !out.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{s}]");
            }
            for e in self.entries.iter().filter(|e| e.section == s) {
                let _ = writeln!(out, "{} = {}", e.key, e.value);
            }
        }
        out
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-'
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg = FlatConfig::parse("top = 1\n# c\n[a]\nx = 2.5 # trailing\n\n[b]\ny = hello world\n")
            .unwrap();
        assert_eq!(cfg.get("", "top").unwrap().value, "1");
        assert_eq!(cfg.parse_f64("a", "x").unwrap(), Some(2.5));
        assert_eq!(cfg.get("b", "y").unwrap().value, "hello world");
        assert_eq!(cfg.get("b", "y").unwrap().line, 7);
    }

    #[test]
    fn reports_line_of_bad_input() {
        let err = FlatConfig::parse("[a]\nx = 1\nnot a pair\n").unwrap_err();
        assert_eq!(
            err,
            Error::Config {
                line: 3,
                msg: "expected `key = value`, found `not a pair`".into()
            }
        );
        let err = FlatConfig::parse("[a]\nx = 1\nx = 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }));
    }

    #[test]
    fn schema_rejects_unknown_keys() {
        let cfg = FlatConfig::parse("[a]\nx = 1\nz = 2\n").unwrap();
        let err = cfg.check_schema(&[("a", &["x", "y"])]).unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }));
        let err = cfg.check_schema(&[("b", &["x"])]).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
    }

    #[test]
    fn bad_number_reports_line() {
        let cfg = FlatConfig::parse("[a]\n\nx = abc\n").unwrap();
        assert!(matches!(cfg.parse_f64("a", "x"), Err(Error::Config { line: 3, .. })));
    }

    #[test]
    fn render_groups_by_section() {
        let mut cfg = FlatConfig::parse("[a]\nx = 1\n[b]\ny = 2\n").unwrap();
        cfg.set("a", "z", "3");
        assert_eq!(cfg.render(), "[a]\nx = 1\nz = 3\n\n[b]\ny = 2\n");
        let again = FlatConfig::parse(&cfg.render()).unwrap();
        assert_eq!(again.get("a", "z").unwrap().value, "3");
    }
}
