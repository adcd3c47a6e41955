//! A SPARQL subset: `PREFIX`/`BASE` declarations followed by
//! `SELECT [DISTINCT] (vars | *) WHERE { basic graph pattern }`, with the
//! `;` and `,` abbreviations and the `a` keyword.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::term::{Term, TriplePattern};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

const UNSUPPORTED: &[&str] = &[
    "OPTIONAL", "UNION", "FILTER", "MINUS", "BIND", "VALUES", "GRAPH", "SERVICE", "CONSTRUCT",
    "ASK", "DESCRIBE", "ORDER", "GROUP", "LIMIT", "OFFSET", "HAVING", "FROM", "REDUCED",
    "EXISTS", "NOT", "AS", "INSERT", "DELETE", "LOAD", "CLEAR",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparqlError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unsupported SPARQL feature: {0}")]
    Unsupported(String),
    #[error("undeclared prefix {0:?}")]
    UnknownPrefix(String),
    #[error("projected variable ?{0} does not occur in the pattern")]
    UnboundProjection(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    All,
    Vars(Vec<Arc<str>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BgpQuery {
    pub projection: Projection,
    pub distinct: bool,
    pub patterns: Vec<TriplePattern>,
}

impl BgpQuery {
    /// Distinct variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Arc<str>> {
        let mut out: Vec<Arc<str>> = Vec::new();
        for v in self.patterns.iter().flat_map(TriplePattern::vars) {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }

    /// The variables reported in result rows.
    pub fn result_vars(&self) -> Vec<Arc<str>> {
        match &self.projection {
            Projection::All => self.vars(),
            Projection::Vars(vars) => vars.clone(),
        }
    }

    /// Renders the query back to the accepted syntax (full IRIs, no prefixes).
    pub fn to_sparql(&self) -> String {
        let mut out = String::from("SELECT ");
        if self.distinct {
            out.push_str("DISTINCT ");
        }
        match &self.projection {
            Projection::All => out.push('*'),
            Projection::Vars(vars) => {
                let names: Vec<String> = vars.iter().map(|v| format!("?{v}")).collect();
                out.push_str(&names.join(" "));
            }
        }
        out.push_str(" WHERE {\n");
        for tp in &self.patterns {
            out.push_str(&format!("  {tp} .\n"));
        }
        out.push('}');
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Iri(String),
    /// A bare word, possibly a prefixed name (`prefix:local`).
    Word(String),
    Literal(String),
    Punct(char),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

fn word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '.' | '%')
}

impl<'a> Lexer<'a> {
    fn err(&self, message: impl Into<String>) -> SparqlError {
        SparqlError::Syntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump(&mut self, n: usize) -> &'a str {
        let s = &self.src[self.pos..self.pos + n];
        self.line += s.matches('\n').count();
        self.pos += n;
        s
    }

    fn quoted(&mut self, quote: char) -> Result<String, SparqlError> {
        let rest = self.rest();
        let mut escaped = false;
        let mut end = None;
        for (i, c) in rest.char_indices().skip(1) {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == quote {
                end = Some(i);
                break;
            } else if c == '\n' {
                break;
            }
        }
        let end = end.ok_or_else(|| self.err("unterminated string literal"))?;
        let body = &rest[1..end];
        self.bump(end + 1);
        Ok(if quote == '"' {
            format!("\"{body}\"")
        } else {
            format!("\"{}\"", body.replace("\\'", "'").replace('"', "\\\""))
        })
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, SparqlError> {
        let mut out = Vec::new();
        loop {
            let skip = self.rest().len() - self.rest().trim_start().len();
            self.bump(skip);
            let Some(c) = self.rest().chars().next() else {
                return Ok(out);
            };
            let line = self.line;
            let tok = match c {
                '#' => {
                    let n = self.rest().find('\n').unwrap_or(self.rest().len());
                    self.bump(n);
                    continue;
                }
                '?' | '$' => {
                    let n = self.rest()[1..]
                        .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                        .unwrap_or(self.rest().len() - 1);
                    if n == 0 {
                        return Err(self.err("empty variable name"));
                    }
                    let name = self.bump(n + 1)[1..].to_string();
                    Tok::Var(name)
                }
                '<' => match self.rest().find(['>', ' ', '\t', '\n', '\r']) {
                    Some(n) if self.rest().as_bytes()[n] == b'>' => {
                        let iri = self.bump(n + 1);
                        Tok::Iri(iri[1..iri.len() - 1].to_string())
                    }
                    // A comparison operator; only valid inside unsupported
                    // constructs, which the keyword scan reports.
                    _ => {
                        self.bump(1);
                        Tok::Punct('<')
                    }
                },
                '"' | '\'' => {
                    let mut lit = self.quoted(c)?;
                    if self.rest().starts_with('@') {
                        let n = 1 + self.rest()[1..]
                            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                            .unwrap_or(self.rest().len() - 1);
                        lit.push_str(self.bump(n));
                    } else if self.rest().starts_with("^^") {
                        self.bump(2);
                        lit.push_str("^^");
                        out.push((Tok::Literal(lit), line));
                        continue;
                    }
                    Tok::Literal(lit)
                }
                '{' | '}' | '.' | ';' | ',' | '*' | '(' | ')' | '[' | ']' => {
                    self.bump(1);
                    Tok::Punct(c)
                }
                c if word_char(c) || c == '+' => {
                    let n = 1 + self.rest()[1..]
                        .find(|c: char| !word_char(c))
                        .unwrap_or(self.rest().len() - 1);
                    let mut word = &self.rest()[..n];
                    while word.len() > 1 && word.ends_with('.') {
                        word = &word[..word.len() - 1];
                    }
                    let word = self.bump(word.len());
                    Tok::Word(word.to_string())
                }
                '>' | '=' | '!' | '&' | '|' | '-' | '/' => {
                    self.bump(1);
                    Tok::Punct(c)
                }
                other => return Err(self.err(format!("unexpected character {other:?}"))),
            };
            out.push((tok, line));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    prefixes: Vec<(String, String)>,
    base: String,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.at)
            .or(self.toks.last())
            .map_or(1, |t| t.1)
    }

    fn err(&self, message: impl Into<String>) -> SparqlError {
        SparqlError::Syntax {
            line: self.line(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.0.clone());
        self.at += 1;
        t
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn expect_punct(&mut self, c: char) -> Result<(), SparqlError> {
        match self.next() {
            Some(Tok::Punct(p)) if p == c => Ok(()),
            other => Err(self.err(format!("expected '{c}', found {other:?}"))),
        }
    }

    fn resolve_iri(&self, iri: &str) -> Result<Term, SparqlError> {
        let full = if iri.contains(':') || self.base.is_empty() {
            String::from(iri)
        } else {
            format!("{}{iri}", self.base)
        };
        Term::iri(&full).map_err(|e| self.err(e.to_string()))
    }

    fn prefixed(&self, word: &str) -> Result<Term, SparqlError> {
        let (prefix, local) = word
            .split_once(':')
            .ok_or_else(|| self.err(format!("unexpected word {word:?}")))?;
        let ns = self
            .prefixes
            .iter()
            .rev()
            .find(|(p, _)| p == prefix)
            .map(|(_, ns)| ns)
            .ok_or_else(|| SparqlError::UnknownPrefix(String::from(prefix)))?;
        Term::iri(&format!("{ns}{local}")).map_err(|e| self.err(e.to_string()))
    }

    fn word_term(&self, word: &str) -> Result<Term, SparqlError> {
        if word.contains(':') {
            return self.prefixed(word);
        }
        if word == "true" || word == "false" {
            return Ok(Term::Literal(format!("\"{word}\"^^<{XSD}boolean>").into()));
        }
        let digits = word.trim_start_matches(['+', '-']);
        if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit() || c == '.') {
            let dt = if digits.contains('.') { "decimal" } else { "integer" };
            return Ok(Term::Literal(format!("\"{word}\"^^<{XSD}{dt}>").into()));
        }
        Err(self.err(format!("unexpected word {word:?}")))
    }

    fn term(&mut self) -> Result<Term, SparqlError> {
        match self.next() {
            Some(Tok::Var(v)) => Term::var(&v).map_err(|e| self.err(e.to_string())),
            Some(Tok::Iri(iri)) => self.resolve_iri(&iri),
            Some(Tok::Literal(lit)) if lit.ends_with("^^") => {
                let dt = match self.next() {
                    Some(Tok::Iri(iri)) => self.resolve_iri(&iri)?,
                    Some(Tok::Word(w)) => self.prefixed(&w)?,
                    _ => return Err(self.err("expected datatype IRI")),
                };
                Term::literal_token(&format!("{lit}{dt}")).map_err(|e| self.err(e.to_string()))
            }
            Some(Tok::Literal(lit)) => {
                Term::literal_token(&lit).map_err(|e| self.err(e.to_string()))
            }
            Some(Tok::Word(w)) if w.starts_with("_:") => {
                Err(SparqlError::Unsupported(String::from("blank nodes in queries")))
            }
            Some(Tok::Punct('[')) => {
                Err(SparqlError::Unsupported(String::from("blank nodes in queries")))
            }
            Some(Tok::Punct('{')) => {
                Err(SparqlError::Unsupported(String::from("nested group patterns")))
            }
            Some(Tok::Word(w)) => self.word_term(&w),
            other => Err(self.err(format!("expected a term, found {other:?}"))),
        }
    }

    fn verb(&mut self) -> Result<Term, SparqlError> {
        if matches!(self.peek(), Some(Tok::Word(w)) if w == "a") {
            self.next();
            return Term::iri(RDF_TYPE).map_err(|e| self.err(e.to_string()));
        }
        self.term()
    }

    fn prologue(&mut self) -> Result<(), SparqlError> {
        loop {
            if self.keyword("PREFIX") {
                self.next();
                let name = match self.next() {
                    Some(Tok::Word(w)) if w.ends_with(':') => w[..w.len() - 1].to_string(),
                    _ => return Err(self.err("expected prefix name ending in ':'")),
                };
                let ns = match self.next() {
                    Some(Tok::Iri(iri)) => iri,
                    _ => return Err(self.err("expected namespace IRI")),
                };
                self.prefixes.push((name, ns));
            } else if self.keyword("BASE") {
                self.next();
                match self.next() {
                    Some(Tok::Iri(iri)) => self.base = iri,
                    _ => return Err(self.err("expected base IRI")),
                }
            } else {
                return Ok(());
            }
        }
    }

    fn group(&mut self) -> Result<Vec<TriplePattern>, SparqlError> {
        self.expect_punct('{')?;
        let mut patterns: Vec<TriplePattern> = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Punct('}')) => {
                    self.next();
                    return Ok(patterns);
                }
                Some(Tok::Punct('.')) if !patterns.is_empty() => {
                    self.next();
                    continue;
                }
                None => return Err(self.err("unterminated group pattern")),
                _ => {}
            }
            let subject = self.term()?;
            loop {
                let predicate = self.verb()?;
                loop {
                    let object = self.term()?;
                    let tp = TriplePattern::new(subject.clone(), predicate.clone(), object)
                        .map_err(|e| self.err(e.to_string()))?;
                    if !patterns.contains(&tp) {
                        patterns.push(tp);
                    }
                    if self.peek() == Some(&Tok::Punct(',')) {
                        self.next();
                    } else {
                        break;
                    }
                }
                if self.peek() != Some(&Tok::Punct(';')) {
                    break;
                }
                while self.peek() == Some(&Tok::Punct(';')) {
                    self.next();
                }
                if matches!(self.peek(), Some(Tok::Punct('.' | '}'))) {
                    break;
                }
            }
            match self.peek() {
                Some(Tok::Punct('.' | '}')) => {}
                other => return Err(self.err(format!("expected '.' or '}}', found {other:?}"))),
            }
        }
    }
}

/// Parses a `SELECT` query over a single basic graph pattern.
///
/// Duplicate triple patterns are dropped (a BGP is a set); the order of
/// first occurrence is kept.
pub fn parse_sparql_select(text: &str) -> Result<BgpQuery, SparqlError> {
    let toks = Lexer {
        src: text,
        pos: 0,
        line: 1,
    }
    .tokens()?;
    for (tok, _) in &toks {
        if let Tok::Word(w) = tok {
            if let Some(kw) = UNSUPPORTED.iter().find(|k| w.eq_ignore_ascii_case(k)) {
                return Err(SparqlError::Unsupported(String::from(*kw)));
            }
        }
    }
    let mut p = Parser {
        toks,
        at: 0,
        prefixes: Vec::new(),
        base: String::new(),
    };
    p.prologue()?;
    if !p.keyword("SELECT") {
        return Err(p.err("expected SELECT"));
    }
    p.next();
    let distinct = p.keyword("DISTINCT");
    if distinct {
        p.next();
    }
    let projection = if p.peek() == Some(&Tok::Punct('*')) {
        p.next();
        Projection::All
    } else {
        let mut vars = Vec::new();
        while let Some(Tok::Var(v)) = p.peek() {
            let v: Arc<str> = v.as_str().into();
            if !vars.contains(&v) {
                vars.push(v);
            }
            p.next();
        }
        if vars.is_empty() {
            return Err(p.err("expected '*' or projected variables"));
        }
        Projection::Vars(vars)
    };
    if p.keyword("WHERE") {
        p.next();
    }
    let patterns = p.group()?;
    if let Some(tok) = p.peek() {
        return Err(p.err(format!("unexpected trailing {tok:?}")));
    }
    if patterns.is_empty() {
        return Err(p.err("empty basic graph pattern"));
    }
    let query = BgpQuery {
        projection,
        distinct,
        patterns,
    };
    if let Projection::Vars(vars) = &query.projection {
        let all = query.vars();
        if let Some(missing) = vars.iter().find(|v| !all.contains(v)) {
            return Err(SparqlError::UnboundProjection(missing.to_string()));
        }
    }
    Ok(query)
}
