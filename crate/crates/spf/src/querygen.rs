//! Query loads over a generated graph.
//!
//! Queries are grown from real entities, so every one has an answer by
//! construction; the oracle confirms it before a query is accepted. A
//! candidate is also rejected when the cardinality order a client would
//! use joins a unit that shares no variable with the units before it, or
//! when some join prefix exceeds [`MAX_INTERMEDIATE`] rows. Both keep the
//! per-binding TPF baseline tractable.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spf_core::client::{query_units, selector_for};
use spf_core::fragment::select;
use spf_core::oracle::{answer, evaluate_bgp};
use spf_core::{
    parse_sparql_select, star_decompose, BgpQuery, Graph, Mode, Projection, Term, Triple,
    TriplePattern,
};
use thiserror::Error;

use crate::datagen::{predicate, CORE_PREDICATES, LINK_PREDICATES, ONTOLOGY_NS};

pub const MAX_ANSWERS: usize = 300;
pub const MAX_INTERMEDIATE: usize = 300;
const ATTEMPTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Load {
    OneStar,
    TwoStars,
    ThreeStars,
    Paths,
    /// A round-robin mix of the other four.
    Union,
}

impl Load {
    pub const BASIC: [Load; 4] = [Load::OneStar, Load::TwoStars, Load::ThreeStars, Load::Paths];

    pub fn label(self) -> &'static str {
        match self {
            Load::OneStar => "1-star",
            Load::TwoStars => "2-stars",
            Load::ThreeStars => "3-stars",
            Load::Paths => "paths",
            Load::Union => "union",
        }
    }
}

impl fmt::Display for Load {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Load {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Load::OneStar, Load::TwoStars, Load::ThreeStars, Load::Paths, Load::Union]
            .into_iter()
            .find(|l| l.label() == s)
            .ok_or_else(|| format!("unknown load {s:?} (1-star, 2-stars, 3-stars, paths, union)"))
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedQuery {
    pub load: Load,
    pub text: String,
    pub query: BgpQuery,
    /// Oracle answer count.
    pub answers: usize,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("could not generate a non-empty {load} query within {attempts} attempts")]
    Exhausted { load: Load, attempts: usize },
    #[error("graph has no entities")]
    EmptyGraph,
}

/// Subject → (predicate, object) facts of a graph.
struct Facts {
    triples: Vec<Triple>,
    by_subject: BTreeMap<Term, Vec<(Term, Term)>>,
    subjects: Vec<Term>,
}

impl Facts {
    fn new(g: &Graph) -> Self {
        let triples: Vec<Triple> = g.triples().collect();
        let mut by_subject: BTreeMap<Term, Vec<(Term, Term)>> = BTreeMap::new();
        for t in &triples {
            by_subject
                .entry(t.subject.clone())
                .or_default()
                .push((t.predicate.clone(), t.object.clone()));
        }
        let subjects = by_subject.keys().cloned().collect();
        Facts {
            triples,
            by_subject,
            subjects,
        }
    }

    fn facts(&self, s: &Term) -> &[(Term, Term)] {
        self.by_subject.get(s).map(Vec::as_slice).unwrap_or(&[])
    }

    fn object(&self, s: &Term, p: &Term) -> Option<&Term> {
        self.facts(s).iter().find(|(q, _)| q == p).map(|(_, o)| o)
    }
}

fn var(name: &str) -> Term {
    Term::var(name).expect("valid variable name")
}

fn local_name(p: &Term) -> &str {
    let iri = p.lexical();
    iri.strip_prefix(ONTOLOGY_NS)
        .unwrap_or_else(|| iri.rsplit(['/', '#']).next().unwrap_or(iri))
}

fn is_link(p: &Term) -> bool {
    LINK_PREDICATES.iter().any(|l| predicate(l) == *p)
}

fn tp(s: Term, p: Term, o: Term) -> TriplePattern {
    TriplePattern::new(s, p, o).expect("generated patterns are well formed")
}

/// Attribute patterns for entity `e` under root variable `root`.
/// `selective` stars keep at least one constant object; the others use
/// only the core predicates with variable objects.
fn attribute_patterns(
    facts: &Facts,
    e: &Term,
    root: &str,
    star_no: usize,
    selective: bool,
    max: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<TriplePattern>> {
    let candidates: Vec<&(Term, Term)> = facts
        .facts(e)
        .iter()
        .filter(|(p, _)| {
            !is_link(p) && (selective || CORE_PREDICATES.iter().any(|c| predicate(c) == *p))
        })
        .collect();
    let n = rng.random_range(2..=max.min(candidates.len()).max(2));
    if candidates.len() < n {
        return None;
    }
    let mut chosen: Vec<&(Term, Term)> = candidates.choose_multiple(rng, n).copied().collect();
    chosen.sort_by_key(|(p, _)| p.clone());
    let forced = rng.random_range(0..n);
    Some(
        chosen
            .into_iter()
            .enumerate()
            .map(|(i, (p, o))| {
                let constant = selective && (i == forced || rng.random_bool(0.25));
                let object = if constant {
                    o.clone()
                } else {
                    var(&format!("{}{star_no}", local_name(p)))
                };
                tp(var(root), p.clone(), object)
            })
            .collect(),
    )
}

fn link_pattern(facts: &Facts, e: &Term, from: &str, to: &str, link: &str) -> Option<(TriplePattern, Term)> {
    let p = predicate(link);
    let target = facts.object(e, &p)?.clone();
    Some((tp(var(from), p, var(to)), target))
}

fn star_query(facts: &Facts, k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<TriplePattern>> {
    let a = facts.subjects.choose(rng)?.clone();
    let mut patterns = attribute_patterns(facts, &a, "p1", 1, true, if k == 1 { 4 } else { 3 }, rng)?;
    if k == 1 {
        return Some(patterns);
    }
    let mut links: Vec<&str> = LINK_PREDICATES.to_vec();
    links.shuffle(rng);
    let (ab, b) = link_pattern(facts, &a, "p1", "p2", links[0])?;
    patterns.push(ab);
    if k == 2 {
        patterns.extend(attribute_patterns(facts, &b, "p2", 2, false, 3, rng)?);
        return Some(patterns);
    }
    // Three stars: either a chain p1 → p2 → p3 or a fork p1 → p2, p1 → p3.
    if rng.random_bool(0.5) {
        patterns.extend(attribute_patterns(facts, &b, "p2", 2, false, 3, rng)?);
        let (bc, c) = link_pattern(facts, &b, "p2", "p3", links[1])?;
        patterns.push(bc);
        patterns.extend(attribute_patterns(facts, &c, "p3", 3, false, 3, rng)?);
    } else {
        let (ac, c) = link_pattern(facts, &a, "p1", "p3", links[1])?;
        patterns.push(ac);
        patterns.extend(attribute_patterns(facts, &b, "p2", 2, false, 3, rng)?);
        patterns.extend(attribute_patterns(facts, &c, "p3", 3, false, 3, rng)?);
    }
    Some(patterns)
}

/// A walk of 5 to 9 link hops from a constant start entity.
fn path_query(facts: &Facts, rng: &mut ChaCha8Rng) -> Option<Vec<TriplePattern>> {
    let len = rng.random_range(5..=9);
    let mut at = facts.subjects.choose(rng)?.clone();
    let mut subject = at.clone();
    let mut patterns = Vec::with_capacity(len);
    for i in 1..=len {
        let link = predicate(LINK_PREDICATES.choose(rng)?);
        let next = facts.object(&at, &link)?.clone();
        let object = var(&format!("x{i}"));
        patterns.push(tp(subject, link, object.clone()));
        subject = object;
        at = next;
    }
    Some(patterns)
}

fn projection(patterns: &[TriplePattern], rng: &mut ChaCha8Rng) -> (Projection, bool) {
    if !rng.random_bool(0.3) {
        return (Projection::All, false);
    }
    let mut vars: Vec<Arc<str>> = Vec::new();
    for v in patterns.iter().flat_map(TriplePattern::vars) {
        if !vars.contains(v) {
            vars.push(v.clone());
        }
    }
    let keep = rng.random_range(1..=vars.len());
    let mut chosen: Vec<Arc<str>> = vars.choose_multiple(rng, keep).cloned().collect();
    chosen.sort_by_key(|v| vars.iter().position(|w| w == v));
    (Projection::Vars(chosen), true)
}

fn shape_ok(q: &BgpQuery, load: Load) -> bool {
    let stars = star_decompose(q).stars;
    match load {
        Load::Paths => stars.iter().all(|s| s.len() == 1),
        Load::OneStar => stars.len() == 1 && stars[0].len() >= 2,
        Load::TwoStars => stars.len() == 2 && stars.iter().all(|s| s.len() >= 2),
        Load::ThreeStars => stars.len() == 3 && stars.iter().all(|s| s.len() >= 2),
        Load::Union => true,
    }
}

/// Orders the client units as a client in `mode` would and checks that
/// each unit joins the ones before it and no prefix gets too large.
fn plan_ok(facts: &Facts, g: &Graph, q: &BgpQuery, mode: Mode) -> bool {
    let units = query_units(q, mode);
    let mut keyed: Vec<(usize, usize)> = units
        .iter()
        .enumerate()
        .map(|(i, u)| (select(g, &selector_for(u, Vec::new())).len(), i))
        .collect();
    keyed.sort();
    let mut seen: Vec<Arc<str>> = Vec::new();
    let mut prefix: Vec<TriplePattern> = Vec::new();
    for (n, (_, i)) in keyed.into_iter().enumerate() {
        let unit = &units[i];
        let vars = unit.vars();
        if n > 0 && !vars.iter().any(|v| seen.contains(v)) {
            return false;
        }
        seen.extend(vars);
        prefix.extend(unit.patterns().iter().cloned());
        if n > 0 && evaluate_bgp(&facts.triples, &prefix).len() > MAX_INTERMEDIATE {
            return false;
        }
    }
    true
}

fn candidate(
    facts: &Facts,
    g: &Graph,
    load: Load,
    rng: &mut ChaCha8Rng,
) -> Option<GeneratedQuery> {
    let patterns = match load {
        Load::OneStar => star_query(facts, 1, rng)?,
        Load::TwoStars => star_query(facts, 2, rng)?,
        Load::ThreeStars => star_query(facts, 3, rng)?,
        Load::Paths => path_query(facts, rng)?,
        Load::Union => unreachable!("union is expanded by the caller"),
    };
    let (projection, distinct) = projection(&patterns, rng);
    let built = BgpQuery {
        projection,
        distinct,
        patterns,
    };
    let text = built.to_sparql();
    let query = parse_sparql_select(&text).ok()?;
    if query != built || !shape_ok(&query, load) {
        return None;
    }
    let answers = answer(&facts.triples, &query).len();
    if answers == 0 || answers > MAX_ANSWERS {
        return None;
    }
    if !plan_ok(facts, g, &query, Mode::Spf) || !plan_ok(facts, g, &query, Mode::Brtpf) {
        return None;
    }
    Some(GeneratedQuery {
        load,
        text,
        query,
        answers,
    })
}

/// `count` queries of `load` over `g`, identical for identical arguments.
pub fn generate_queries(
    load: Load,
    count: usize,
    g: &Graph,
    seed: u64,
) -> Result<Vec<GeneratedQuery>, GenError> {
    let facts = Facts::new(g);
    if facts.subjects.is_empty() {
        return Err(GenError::EmptyGraph);
    }
    let salt = Load::BASIC.iter().position(|l| *l == load).unwrap_or(4) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(salt));
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let this = match load {
            Load::Union => Load::BASIC[i % Load::BASIC.len()],
            l => l,
        };
        let q = (0..ATTEMPTS)
            .find_map(|_| candidate(&facts, g, this, &mut rng))
            .ok_or(GenError::Exhausted {
                load: this,
                attempts: ATTEMPTS,
            })?;
        out.push(q);
    }
    Ok(out)
}
