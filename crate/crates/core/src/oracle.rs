//! Reference evaluator for basic graph patterns.
//!
//! Works on a plain triple slice with no dictionary or index, enumerating
//! one candidate triple per pattern and backtracking on conflicts. Nothing
//! here shares code with the indexed graph or the selectors, so it can be
//! used to check them.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::mapping::SolutionMapping;
use crate::sparql::BgpQuery;
use crate::term::{Term, Triple, TriplePattern};

fn constant_fit(tp: &TriplePattern, t: &Triple) -> bool {
    [
        (&tp.subject, &t.subject),
        (&tp.predicate, &t.predicate),
        (&tp.object, &t.object),
    ]
    .iter()
    .all(|(p, v)| p.is_var() || p == v)
}

/// Extends `mu` so that `tp` maps onto `t`, or reports a conflict.
fn unify(mu: &mut Vec<(Arc<str>, Term)>, tp: &TriplePattern, t: &Triple) -> bool {
    for (p, v) in [
        (&tp.subject, &t.subject),
        (&tp.predicate, &t.predicate),
        (&tp.object, &t.object),
    ] {
        if let Term::Variable(name) = p {
            match mu.iter().find(|(n, _)| n == name) {
                Some((_, bound)) if bound != v => return false,
                Some(_) => {}
                None => mu.push((name.clone(), v.clone())),
            }
        }
    }
    true
}

/// Orders patterns so each one after the first shares a variable with an
/// earlier one when possible, smallest candidate list first.
fn visit_order(patterns: &[TriplePattern], sizes: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(patterns.len());
    let mut seen: Vec<&Arc<str>> = Vec::new();
    while order.len() < patterns.len() {
        let connected = |i: &usize| patterns[*i].vars().any(|v| seen.contains(&v));
        let remaining: Vec<usize> = (0..patterns.len()).filter(|i| !order.contains(i)).collect();
        let pool: Vec<usize> = if order.is_empty() {
            remaining.clone()
        } else {
            let c: Vec<usize> = remaining.iter().copied().filter(connected).collect();
            if c.is_empty() {
                remaining.clone()
            } else {
                c
            }
        };
        let pick = *pool.iter().min_by_key(|&&i| (sizes[i], i)).expect("non-empty");
        seen.extend(patterns[pick].vars());
        order.push(pick);
    }
    order
}

/// Every solution mapping of the conjunction of `patterns` over the set of
/// `triples`, sorted.
pub fn evaluate_bgp(triples: &[Triple], patterns: &[TriplePattern]) -> Vec<SolutionMapping> {
    let set: BTreeSet<&Triple> = triples.iter().collect();
    let candidates: Vec<Vec<&Triple>> = patterns
        .iter()
        .map(|tp| set.iter().copied().filter(|t| constant_fit(tp, t)).collect())
        .collect();
    let sizes: Vec<usize> = candidates.iter().map(Vec::len).collect();
    let order = visit_order(patterns, &sizes);
    type Partial = Vec<(Arc<str>, Term)>;

    let mut out: BTreeSet<SolutionMapping> = BTreeSet::new();
    let mut stack: Vec<(usize, Partial)> = alloc::vec![(0, Vec::new())];
    while let Some((depth, mu)) = stack.pop() {
        if depth == order.len() {
            out.insert(mu.into_iter().collect());
            continue;
        }
        let i = order[depth];
        for t in &candidates[i] {
            let mut next = mu.clone();
            if unify(&mut next, &patterns[i], t) {
                stack.push((depth + 1, next));
            }
        }
    }
    out.into_iter().collect()
}

/// Result rows of `query`: mappings projected to the result variables,
/// deduplicated under `DISTINCT`, sorted.
pub fn answer(triples: &[Triple], query: &BgpQuery) -> Vec<SolutionMapping> {
    let vars = query.result_vars();
    let mut rows: Vec<SolutionMapping> = evaluate_bgp(triples, &query.patterns)
        .iter()
        .map(|mu| mu.project(|v| vars.iter().any(|k| &**k == v)))
        .collect();
    rows.sort();
    if query.distinct {
        rows.dedup();
    }
    rows
}
