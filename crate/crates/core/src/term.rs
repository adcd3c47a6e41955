//! RDF terms, triples and triple patterns.

use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

use thiserror::Error;

/// The four disjoint term sets: IRIs, literals, blank nodes and variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermKind {
    Iri,
    Literal,
    Blank,
    Variable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("IRI must be non-empty and free of whitespace: {0:?}")]
    InvalidIri(String),
    #[error("malformed literal token: {0:?}")]
    InvalidLiteral(String),
    #[error("blank node label must be non-empty and free of whitespace: {0:?}")]
    InvalidBlank(String),
    #[error("variable name must be non-empty and free of whitespace: {0:?}")]
    InvalidVariable(String),
    #[error("unrecognised term encoding: {0:?}")]
    UnknownEncoding(String),
    #[error("{position} of {what} may not be {kind:?}")]
    Position {
        what: &'static str,
        position: &'static str,
        kind: TermKind,
    },
}

/// An RDF term or a query variable.
///
/// Literals keep their complete token, quotes and any `@lang` or `^^<dt>`
/// suffix included, and compare on that opaque form. IRIs, blank nodes and
/// variables store the bare name without `<>`, `_:` or `?`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Arc<str>),
    Literal(Arc<str>),
    Blank(Arc<str>),
    Variable(Arc<str>),
}

fn clean_name(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

/// Byte index of the quote closing the string that opens at `token[0]`.
pub(crate) fn closing_quote(token: &str) -> Option<usize> {
    let bytes = token.as_bytes();
    if bytes.first() != Some(&b'"') {
        return None;
    }
    let mut i = 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return Some(i),
            _ => i += 1,
        }
    }
    None
}

fn valid_literal_token(token: &str) -> bool {
    let Some(end) = closing_quote(token) else {
        return false;
    };
    let suffix = &token[end + 1..];
    if suffix.is_empty() {
        return true;
    }
    if let Some(lang) = suffix.strip_prefix('@') {
        return !lang.is_empty()
            && lang.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
    }
    if let Some(dt) = suffix.strip_prefix("^^<") {
        return dt
            .strip_suffix('>')
            .is_some_and(|iri| clean_name(iri) && !iri.contains(['<', '>']));
    }
    false
}

impl Term {
    pub fn iri(iri: &str) -> Result<Self, TermError> {
        if clean_name(iri) && !iri.contains(['<', '>']) {
            Ok(Term::Iri(iri.into()))
        } else {
            Err(TermError::InvalidIri(iri.into()))
        }
    }

    /// A plain string literal; `"` and `\` in `value` are escaped.
    pub fn literal(value: &str) -> Self {
        let mut token = String::with_capacity(value.len() + 2);
        token.push('"');
        for c in value.chars() {
            match c {
                '"' => token.push_str("\\\""),
                '\\' => token.push_str("\\\\"),
                '\n' => token.push_str("\\n"),
                '\r' => token.push_str("\\r"),
                c => token.push(c),
            }
        }
        token.push('"');
        Term::Literal(token.into())
    }

    /// A literal from its full token, e.g. `"1970"` or `"x"@en`.
    pub fn literal_token(token: &str) -> Result<Self, TermError> {
        if valid_literal_token(token) {
            Ok(Term::Literal(token.into()))
        } else {
            Err(TermError::InvalidLiteral(token.into()))
        }
    }

    pub fn blank(label: &str) -> Result<Self, TermError> {
        if clean_name(label) {
            Ok(Term::Blank(label.into()))
        } else {
            Err(TermError::InvalidBlank(label.into()))
        }
    }

    pub fn var(name: &str) -> Result<Self, TermError> {
        if clean_name(name) {
            Ok(Term::Variable(name.into()))
        } else {
            Err(TermError::InvalidVariable(name.into()))
        }
    }

    /// Decodes the tagged form produced by `Display`: `<iri>`, `"lit"`,
    /// `_:blank` or `?var`.
    pub fn parse_tagged(s: &str) -> Result<Self, TermError> {
        if let Some(rest) = s.strip_prefix('<') {
            let iri = rest
                .strip_suffix('>')
                .ok_or_else(|| TermError::UnknownEncoding(s.into()))?;
            Term::iri(iri)
        } else if s.starts_with('"') {
            Term::literal_token(s)
        } else if let Some(label) = s.strip_prefix("_:") {
            Term::blank(label)
        } else if let Some(name) = s.strip_prefix('?') {
            Term::var(name)
        } else {
            Err(TermError::UnknownEncoding(s.into()))
        }
    }

    pub fn kind(&self) -> TermKind {
        match self {
            Term::Iri(_) => TermKind::Iri,
            Term::Literal(_) => TermKind::Literal,
            Term::Blank(_) => TermKind::Blank,
            Term::Variable(_) => TermKind::Variable,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn var_name(&self) -> Option<&Arc<str>> {
        match self {
            Term::Variable(name) => Some(name),
            _ => None,
        }
    }

    /// The stored lexical form (see the type docs for what that includes).
    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(s) | Term::Literal(s) | Term::Blank(s) | Term::Variable(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(s) => write!(f, "<{s}>"),
            Term::Literal(s) => f.write_str(s),
            Term::Blank(s) => write!(f, "_:{s}"),
            Term::Variable(s) => write!(f, "?{s}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn check(
    what: &'static str,
    position: &'static str,
    term: &Term,
    allowed: &[TermKind],
) -> Result<(), TermError> {
    if allowed.contains(&term.kind()) {
        Ok(())
    } else {
        Err(TermError::Position {
            what,
            position,
            kind: term.kind(),
        })
    }
}

/// A ground RDF triple.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, TermError> {
        let t = Triple {
            subject,
            predicate,
            object,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), TermError> {
        use TermKind::*;
        check("triple", "subject", &self.subject, &[Iri, Blank])?;
        check("triple", "predicate", &self.predicate, &[Iri])?;
        check("triple", "object", &self.object, &[Iri, Blank, Literal])
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

impl fmt::Debug for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, TermError> {
        let tp = TriplePattern {
            subject,
            predicate,
            object,
        };
        tp.validate()?;
        Ok(tp)
    }

    pub fn validate(&self) -> Result<(), TermError> {
        use TermKind::*;
        check("pattern", "subject", &self.subject, &[Iri, Blank, Variable])?;
        check("pattern", "predicate", &self.predicate, &[Iri, Variable])?;
        check(
            "pattern",
            "object",
            &self.object,
            &[Iri, Blank, Literal, Variable],
        )
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    /// Variable names in subject, predicate, object order (repeats kept).
    pub fn vars(&self) -> impl Iterator<Item = &Arc<str>> {
        self.terms().into_iter().filter_map(Term::var_name)
    }

    /// The triple this pattern denotes when it has no variables.
    pub fn to_triple(&self) -> Option<Triple> {
        if self.terms().iter().any(|t| t.is_var()) {
            return None;
        }
        Some(Triple {
            subject: self.subject.clone(),
            predicate: self.predicate.clone(),
            object: self.object.clone(),
        })
    }
}

impl From<Triple> for TriplePattern {
    fn from(t: Triple) -> Self {
        TriplePattern {
            subject: t.subject,
            predicate: t.predicate,
            object: t.object,
        }
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

impl fmt::Debug for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}
