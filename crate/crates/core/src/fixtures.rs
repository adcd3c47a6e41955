//! Shorthand constructors and the nine-triple people graph used by unit tests.

use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::{build_graph, Graph};
use crate::star::StarPattern;
use crate::term::{Term, Triple, TriplePattern};

const PREFIXES: &[(&str, &str)] = &[
    ("dbo:", "http://dbpedia.org/ontology/"),
    ("dbr:", "http://dbpedia.org/resource/"),
    (":", "http://ex/"),
];

/// `?v`, `"lit"`, `_:b`, `<iri>` or a prefixed name from [`PREFIXES`].
pub fn term(s: &str) -> Term {
    if s.starts_with(['?', '"', '<']) || s.starts_with("_:") {
        return Term::parse_tagged(s).unwrap();
    }
    for (prefix, ns) in PREFIXES {
        if let Some(local) = s.strip_prefix(prefix) {
            let mut iri = String::from(*ns);
            iri.push_str(local);
            return Term::iri(&iri).unwrap();
        }
    }
    panic!("unknown term shorthand {s}")
}

pub fn tp(s: &str, p: &str, o: &str) -> TriplePattern {
    TriplePattern::new(term(s), term(p), term(o)).unwrap()
}

pub fn triple(s: &str, p: &str, o: &str) -> Triple {
    Triple::new(term(s), term(p), term(o)).unwrap()
}

pub fn star(patterns: &[(&str, &str, &str)]) -> StarPattern {
    StarPattern::new(patterns.iter().map(|(s, p, o)| tp(s, p, o)).collect()).unwrap()
}

pub fn g0_triples() -> Vec<Triple> {
    [
        (":alice", ":country", ":Germany"),
        (":alice", ":award", ":X"),
        (":alice", ":birthDate", "\"1970\""),
        (":bob", ":country", ":Norway"),
        (":bob", ":award", ":X"),
        (":bob", ":birthDate", "\"1980\""),
        (":carol", ":country", ":Norway"),
        (":carol", ":award", ":Y"),
        (":carol", ":birthDate", "\"1975\""),
    ]
    .iter()
    .map(|(s, p, o)| triple(s, p, o))
    .collect()
}

pub fn g0() -> Graph {
    build_graph(g0_triples()).unwrap()
}

pub fn s1() -> StarPattern {
    star(&[
        ("?p1", ":country", ":Germany"),
        ("?p1", ":award", "?a"),
        ("?p1", ":birthDate", "?bd1"),
    ])
}

pub fn s2() -> StarPattern {
    star(&[
        ("?p2", ":country", ":Norway"),
        ("?p2", ":award", "?a"),
        ("?p2", ":birthDate", "?bd2"),
    ])
}

pub const TWO_STAR_QUERY: &str = "PREFIX : <http://ex/>
select distinct * where {
  ?p1 :country :Germany . # tp1
  ?p1 :award ?a .         # tp2
  ?p1 :birthDate ?bd1 .   # tp3
  ?p2 :country :Norway .  # tp4
  ?p2 :award ?a .         # tp5
  ?p2 :birthDate ?bd2     # tp6
}";
