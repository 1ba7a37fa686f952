//! Plain-text `key = value` configuration files.
//!
//! One entry per line. Blank lines and lines starting with `#` are ignored.
//! Keys are lower-case identifiers with `_` or `-`; values run to the end of
//! the line and are trimmed. A key may appear at most once.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// One parsed entry with its 1-based source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parses a key-value document, rejecting malformed and duplicate keys.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected `key = value`, got `{trimmed}`")))?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::parse(line, format!("malformed key `{key}`")));
        }
        if !seen.insert(key.clone()) {
            return Err(Error::parse(line, format!("duplicate key `{key}`")));
        }
        out.push(Entry {
            line,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

impl Entry {
    pub fn parse<T: std::str::FromStr>(&self) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.value
            .parse()
            .map_err(|e| Error::parse(self.line, format!("{}: {e}", self.key)))
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn list<T: std::str::FromStr>(&self) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        split_list(&self.value, ',')
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::parse(self.line, format!("{}: `{v}`: {e}", self.key)))
            })
            .collect()
    }

    /// Semicolon-separated groups of comma-separated numbers.
    pub fn groups(&self) -> Result<Vec<Vec<f64>>> {
        split_list(&self.value, ';')
            .map(|g| {
                split_list(g, ',')
                    .map(|v| {
                        v.parse().map_err(|e| {
                            Error::parse(self.line, format!("{}: `{v}`: {e}", self.key))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

fn split_list(s: &str, sep: char) -> impl Iterator<Item = &str> {
    let empty = s.trim().is_empty();
    s.split(sep).map(str::trim).filter(move |_| !empty)
}

pub(crate) fn join<T: std::fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}
