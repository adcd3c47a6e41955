//! Random instances, a brute-force star evaluator and an in-memory
//! fragment source shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spf_core::{
    build_graph, make_fragment, paginate, BgpQuery, Fetched, FragmentRequest, FragmentSource,
    Graph, Projection, SolutionMapping, SourceError, StarPattern, Term, Triple, TriplePattern,
    DEFAULT_PAGE_SIZE,
};

pub fn iri(s: &str) -> Term {
    Term::iri(&format!("http://t/{s}")).unwrap()
}

pub fn var(s: &str) -> Term {
    Term::var(s).unwrap()
}

/// Up to `max` triples over a few subjects, eight predicates and a mix of
/// IRI, literal and blank objects. Subjects double as link targets.
pub fn random_triples(rng: &mut ChaCha8Rng, max: usize) -> Vec<Triple> {
    let n = rng.random_range(1..=max);
    let subjects = (n / 8).max(2);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s = if rng.random_bool(0.05) {
            Term::blank(&format!("b{}", rng.random_range(0..3))).unwrap()
        } else {
            iri(&format!("s{}", rng.random_range(0..subjects)))
        };
        let p = iri(&format!("p{}", rng.random_range(0..8)));
        let o = match rng.random_range(0..10) {
            0..=3 => iri(&format!("s{}", rng.random_range(0..subjects))),
            4..=7 => Term::literal(&format!("v{}", rng.random_range(0..12))),
            8 => Term::literal_token(&format!("\"v{}\"@en", rng.random_range(0..3))).unwrap(),
            _ => Term::blank(&format!("b{}", rng.random_range(0..3))).unwrap(),
        };
        out.push(Triple::new(s, p, o).unwrap());
    }
    out
}

/// A star of 1..=`max_len` patterns generalised from the triples of one
/// subject, so that it usually has matches. At most one predicate is a
/// variable, which keeps brute-force enumeration cheap.
pub fn random_star(rng: &mut ChaCha8Rng, triples: &[Triple], max_len: usize) -> StarPattern {
    loop {
        let subject = &triples.choose(rng).unwrap().subject;
        let own: Vec<&Triple> = triples.iter().filter(|t| &t.subject == subject).collect();
        let k = rng.random_range(1..=max_len);
        let root = if rng.random_bool(0.1) {
            subject.clone()
        } else {
            var("r")
        };
        let mut var_predicate_used = false;
        let mut patterns = Vec::with_capacity(k);
        for i in 0..k {
            // Mostly real triples of the subject; now and then a foreign one.
            let t = if rng.random_bool(0.85) {
                *own.choose(rng).unwrap()
            } else {
                triples.choose(rng).unwrap()
            };
            let p = if !var_predicate_used && rng.random_bool(0.1) {
                var_predicate_used = true;
                var(&format!("p{i}"))
            } else {
                t.predicate.clone()
            };
            let o = match rng.random_range(0..10) {
                0..=5 => var(&format!("o{i}")),
                6..=8 => t.object.clone(),
                // A variable shared with an earlier pattern, or the root.
                _ if i > 0 && rng.random_bool(0.5) => var(&format!("o{}", rng.random_range(0..i))),
                _ => root.clone(),
            };
            patterns.push(TriplePattern::new(root.clone(), p, o).unwrap());
        }
        if let Ok(sp) = StarPattern::new(patterns) {
            return sp;
        }
    }
}

/// Every mapping of `sp` over `triples`, enumerating candidate triples
/// pattern by pattern and keeping the combinations that agree. Returns
/// each μ with the set of triples it matched.
pub fn brute_force_star(triples: &[Triple], sp: &StarPattern) -> Vec<(SolutionMapping, BTreeSet<Triple>)> {
    let set: BTreeSet<&Triple> = triples.iter().collect();
    let mut out: BTreeSet<(SolutionMapping, BTreeSet<Triple>)> = BTreeSet::new();
    fn bind(mu: &mut SolutionMapping, pattern: &Term, value: &Term) -> bool {
        match pattern.var_name() {
            None => pattern == value,
            Some(v) => match mu.get(v) {
                Some(bound) => bound == value,
                None => {
                    mu.bind(v.clone(), value.clone()).unwrap();
                    true
                }
            },
        }
    }
    fn go(
        set: &BTreeSet<&Triple>,
        patterns: &[TriplePattern],
        mu: SolutionMapping,
        chosen: BTreeSet<Triple>,
        out: &mut BTreeSet<(SolutionMapping, BTreeSet<Triple>)>,
    ) {
        let Some((tp, rest)) = patterns.split_first() else {
            out.insert((mu, chosen));
            return;
        };
        for t in set {
            let cheap_reject = tp.terms().iter().zip([&t.subject, &t.predicate, &t.object]).any(
                |(term, value)| match term.var_name() {
                    None => *term != value,
                    Some(v) => mu.get(v).is_some_and(|b| b != value),
                },
            );
            if cheap_reject {
                continue;
            }
            let mut next = mu.clone();
            if bind(&mut next, &tp.subject, &t.subject)
                && bind(&mut next, &tp.predicate, &t.predicate)
                && bind(&mut next, &tp.object, &t.object)
            {
                let mut c = chosen.clone();
                c.insert((*t).clone());
                go(set, rest, next, c, out);
            }
        }
    }
    go(&set, sp.patterns(), SolutionMapping::new(), BTreeSet::new(), &mut out);
    out.into_iter().collect()
}

/// Keeps the groups whose mapping extends some entry of `omega`.
pub fn restrict<T: Clone>(groups: &[(SolutionMapping, T)], omega: &[SolutionMapping]) -> Vec<(SolutionMapping, T)> {
    if omega.is_empty() {
        return groups.to_vec();
    }
    groups
        .iter()
        .filter(|(mu, _)| omega.iter().any(|m| m.iter().all(|(k, v)| mu.get(k) == Some(v))))
        .cloned()
        .collect()
}

/// Up to `max` distinct mappings: projections of true solutions onto
/// random subsets of the star's variables, random bindings of star
/// variables to graph terms, and mappings binding a foreign variable.
pub fn random_omega(
    rng: &mut ChaCha8Rng,
    triples: &[Triple],
    sp: &StarPattern,
    max: usize,
) -> Vec<SolutionMapping> {
    let solutions = brute_force_star(triples, sp);
    let vars = sp.vars();
    let n = rng.random_range(0..=max);
    let mut out: Vec<SolutionMapping> = Vec::new();
    for _ in 0..n * 2 {
        if out.len() == n {
            break;
        }
        let mu = match rng.random_range(0..10) {
            0..=5 if !solutions.is_empty() => {
                let (full, _) = solutions.choose(rng).unwrap();
                let keep: Vec<bool> = vars.iter().map(|_| rng.random_bool(0.5)).collect();
                full.project(|v| vars.iter().zip(&keep).any(|(w, k)| *k && &**w == v))
            }
            6..=8 if !vars.is_empty() => {
                let t = triples.choose(rng).unwrap();
                let v = vars.choose(rng).unwrap();
                let value = [&t.subject, &t.predicate, &t.object][rng.random_range(0..3)].clone();
                SolutionMapping::new().with(v, value)
            }
            _ => SolutionMapping::new().with("foreign", iri("s0")),
        };
        if !out.contains(&mu) {
            out.push(mu);
        }
    }
    out
}

pub struct Instance {
    pub triples: Vec<Triple>,
    pub graph: Graph,
    pub star: StarPattern,
    pub omega: Vec<SolutionMapping>,
}

pub fn random_instance(seed: u64, max_triples: usize, max_star: usize, max_omega: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples = random_triples(&mut rng, max_triples);
    let graph = build_graph(triples.clone()).unwrap();
    let star = random_star(&mut rng, &triples, max_star);
    let omega = random_omega(&mut rng, &triples, &star, max_omega);
    Instance {
        triples,
        graph,
        star,
        omega,
    }
}

/// A BGP of one to three stars over `triples`, linked through objects
/// that are subjects of the next star whenever the data allows.
pub fn random_bgp(rng: &mut ChaCha8Rng, triples: &[Triple]) -> BgpQuery {
    let stars = rng.random_range(1..=3);
    let mut patterns: Vec<TriplePattern> = Vec::new();
    let mut subject = triples.choose(rng).unwrap().subject.clone();
    for s in 0..stars {
        let own: Vec<&Triple> = triples.iter().filter(|t| t.subject == subject).collect();
        let root = var(&format!("r{s}"));
        let k = rng.random_range(1..=3);
        let mut next_subject = None;
        for i in 0..k {
            let t = own.choose(rng).unwrap();
            let o = if s + 1 < stars && next_subject.is_none() && triples.iter().any(|u| u.subject == t.object) {
                next_subject = Some(t.object.clone());
                var(&format!("r{}", s + 1))
            } else if rng.random_bool(0.4) {
                t.object.clone()
            } else {
                var(&format!("o{s}_{i}"))
            };
            let tp = TriplePattern::new(root.clone(), t.predicate.clone(), o).unwrap();
            if !patterns.contains(&tp) {
                patterns.push(tp);
            }
        }
        match next_subject {
            Some(n) => subject = n,
            None => subject = triples.choose(rng).unwrap().subject.clone(),
        }
    }
    let distinct = rng.random_bool(0.3);
    let projection = if distinct {
        let mut vars: Vec<_> = Vec::new();
        for v in patterns.iter().flat_map(TriplePattern::vars) {
            if !vars.contains(v) && rng.random_bool(0.6) {
                vars.push(v.clone());
            }
        }
        if vars.is_empty() {
            Projection::All
        } else {
            Projection::Vars(vars)
        }
    } else {
        Projection::All
    };
    BgpQuery {
        projection,
        distinct,
        patterns,
    }
}

/// Answers requests straight from a graph and remembers them.
pub struct GraphSource {
    pub graph: Graph,
    pub page_size: usize,
    pub seen: Vec<FragmentRequest>,
}

impl GraphSource {
    pub fn new(graph: Graph) -> Self {
        GraphSource {
            graph,
            page_size: DEFAULT_PAGE_SIZE,
            seen: Vec::new(),
        }
    }
}

impl FragmentSource for GraphSource {
    fn fetch(&mut self, request: &FragmentRequest) -> Result<Fetched, SourceError> {
        self.seen.push(request.clone());
        let f = make_fragment("http://t/ds/fragment", request.selector.clone(), &self.graph);
        Ok(Fetched {
            page: paginate(&f, request.page, self.page_size),
            request_bytes: 0,
            response_bytes: 0,
            started_us: 0,
            finished_us: 0,
        })
    }
}
