//! Line-oriented N-Triples reading and writing.
//!
//! Literal tokens are kept verbatim (escapes are not decoded) so that a
//! parse/serialize round trip reproduces the input terms exactly.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::term::{closing_quote, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct NTriplesError {
    pub line: usize,
    pub message: String,
}

struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> NTriplesError {
        NTriplesError {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn term(&mut self, position: &str) -> Result<Term, NTriplesError> {
        self.skip_ws();
        let (token, rest) = match self.rest.as_bytes().first() {
            None => return Err(self.err(alloc::format!("missing {position}"))),
            Some(b'<') => {
                let end = self
                    .rest
                    .find('>')
                    .ok_or_else(|| self.err("unterminated IRI"))?;
                self.rest.split_at(end + 1)
            }
            Some(b'"') => {
                let close =
                    closing_quote(self.rest).ok_or_else(|| self.err("unterminated literal"))?;
                let after = &self.rest[close + 1..];
                let suffix_len = if after.starts_with("^^<") {
                    after.find('>').map(|i| i + 1).unwrap_or(after.len())
                } else if let Some(tag) = after.strip_prefix('@') {
                    1 + tag
                        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                        .unwrap_or(tag.len())
                } else {
                    0
                };
                self.rest.split_at(close + 1 + suffix_len)
            }
            Some(b'_') => {
                let mut end = self
                    .rest
                    .find(|c: char| c.is_whitespace())
                    .unwrap_or(self.rest.len());
                while end > 2 && self.rest.as_bytes()[end - 1] == b'.' {
                    end -= 1;
                }
                self.rest.split_at(end)
            }
            Some(_) => {
                let bad: String = self.rest.chars().take(16).collect();
                return Err(self.err(alloc::format!("unexpected {position} {bad:?}")));
            }
        };
        self.rest = rest;
        Term::parse_tagged(token).map_err(|e| self.err(e.to_string()))
    }
}

/// Parses one statement line. Blank and comment lines yield `Ok(None)`.
pub fn parse_line(line: &str, line_no: usize) -> Result<Option<Triple>, NTriplesError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut cur = Cursor {
        rest: trimmed,
        line: line_no,
    };
    let s = cur.term("subject")?;
    let p = cur.term("predicate")?;
    let o = cur.term("object")?;
    cur.skip_ws();
    let tail = cur
        .rest
        .strip_prefix('.')
        .ok_or_else(|| cur.err("expected '.' after object"))?
        .trim_start();
    if !(tail.is_empty() || tail.starts_with('#')) {
        return Err(cur.err("trailing content after '.'"));
    }
    Triple::new(s, p, o)
        .map(Some)
        .map_err(|e| cur.err(e.to_string()))
}

/// Parses a whole document, keeping statement order and duplicates.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, NTriplesError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(t) = parse_line(line, i + 1)? {
            out.push(t);
        }
    }
    Ok(out)
}

pub fn serialize_ntriples<'a, I: IntoIterator<Item = &'a Triple>>(triples: I) -> String {
    let mut out = String::new();
    for t in triples {
        let _ = writeln!(out, "{t}");
    }
    out
}
