//! Dictionary-encoded triple store with SPO, POS and OSP index permutations.
//!
//! Term ids are assigned in ascending term order, so id order and term
//! order agree and every index scan is deterministic.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::mapping::SolutionMapping;
use crate::term::{Term, TermError, Triple, TriplePattern};

pub type TermId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rejected triple {triple:?}: {source}")]
pub struct GraphError {
    pub triple: Triple,
    #[source]
    pub source: TermError,
}

/// One of the three sorted key permutations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexOrder {
    Spo,
    Pos,
    Osp,
}

impl IndexOrder {
    pub const ALL: [IndexOrder; 3] = [IndexOrder::Spo, IndexOrder::Pos, IndexOrder::Osp];

    /// Triple positions in key order.
    fn positions(self) -> [usize; 3] {
        match self {
            IndexOrder::Spo => [0, 1, 2],
            IndexOrder::Pos => [1, 2, 0],
            IndexOrder::Osp => [2, 0, 1],
        }
    }

    pub(crate) fn key(self, spo: [TermId; 3]) -> [TermId; 3] {
        let [a, b, c] = self.positions();
        [spo[a], spo[b], spo[c]]
    }

    fn unkey(self, key: [TermId; 3]) -> [TermId; 3] {
        let mut spo = [0; 3];
        for (k, pos) in self.positions().into_iter().enumerate() {
            spo[pos] = key[k];
        }
        spo
    }

    /// The permutation whose key prefix covers every bound position.
    pub fn serving(bound: [bool; 3]) -> IndexOrder {
        match bound {
            [_, false, true] => IndexOrder::Osp,
            [false, true, _] => IndexOrder::Pos,
            _ => IndexOrder::Spo,
        }
    }
}

/// Matches for a single triple pattern, with the exact count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternMatches {
    pub mappings: Vec<SolutionMapping>,
    pub count: usize,
}

/// An immutable, indexed set of triples.
#[derive(Debug, Clone)]
pub struct Graph {
    terms: Vec<Term>,
    ids: BTreeMap<Term, TermId>,
    spo: Vec<[TermId; 3]>,
    pos: Vec<[TermId; 3]>,
    osp: Vec<[TermId; 3]>,
}

/// Validates, deduplicates and indexes `triples`.
pub fn build_graph<I: IntoIterator<Item = Triple>>(triples: I) -> Result<Graph, GraphError> {
    let mut ids: BTreeMap<Term, TermId> = BTreeMap::new();
    let mut raw: Vec<Triple> = Vec::new();
    for t in triples {
        if let Err(source) = t.validate() {
            return Err(GraphError { triple: t, source });
        }
        for term in [&t.subject, &t.predicate, &t.object] {
            if !ids.contains_key(term) {
                ids.insert(term.clone(), 0);
            }
        }
        raw.push(t);
    }
    let mut terms = Vec::with_capacity(ids.len());
    for (i, (term, id)) in ids.iter_mut().enumerate() {
        *id = i as TermId;
        terms.push(term.clone());
    }
    let mut spo: Vec<[TermId; 3]> = raw
        .iter()
        .map(|t| [ids[&t.subject], ids[&t.predicate], ids[&t.object]])
        .collect();
    spo.sort_unstable();
    spo.dedup();
    let build = |order: IndexOrder| {
        let mut v: Vec<[TermId; 3]> = spo.iter().map(|&t| order.key(t)).collect();
        v.sort_unstable();
        v
    };
    let pos = build(IndexOrder::Pos);
    let osp = build(IndexOrder::Osp);
    Ok(Graph {
        terms,
        ids,
        spo,
        pos,
        osp,
    })
}

impl Graph {
    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn id(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id as usize]
    }

    pub fn triple(&self, spo: [TermId; 3]) -> Triple {
        Triple {
            subject: self.term(spo[0]).clone(),
            predicate: self.term(spo[1]).clone(),
            object: self.term(spo[2]).clone(),
        }
    }

    /// All triples in SPO order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&t| self.triple(t))
    }

    fn index(&self, order: IndexOrder) -> &[[TermId; 3]] {
        match order {
            IndexOrder::Spo => &self.spo,
            IndexOrder::Pos => &self.pos,
            IndexOrder::Osp => &self.osp,
        }
    }

    /// Number of entries of `order` sharing the key prefix derived from `bound`.
    fn prefix(order: IndexOrder, bound: [Option<TermId>; 3]) -> Vec<TermId> {
        let key = order.positions().map(|p| bound[p]);
        key.iter().map_while(|k| *k).collect()
    }

    fn range(&self, order: IndexOrder, prefix: &[TermId]) -> &[[TermId; 3]] {
        let idx = self.index(order);
        let n = prefix.len();
        let lo = idx.partition_point(|k| k[..n] < *prefix);
        let hi = lo + idx[lo..].partition_point(|k| k[..n] == *prefix);
        &idx[lo..hi]
    }

    /// Triples (as SPO ids) agreeing with every bound position, in the
    /// key order of `order`. Bound positions not covered by the key prefix
    /// are filtered.
    pub(crate) fn scan_with(
        &self,
        order: IndexOrder,
        bound: [Option<TermId>; 3],
    ) -> impl Iterator<Item = [TermId; 3]> + '_ {
        let prefix = Self::prefix(order, bound);
        self.range(order, &prefix)
            .iter()
            .map(move |&k| order.unkey(k))
            .filter(move |spo| (0..3).all(|i| bound[i].is_none_or(|b| b == spo[i])))
    }

    pub(crate) fn scan(
        &self,
        bound: [Option<TermId>; 3],
    ) -> impl Iterator<Item = [TermId; 3]> + '_ {
        self.scan_with(IndexOrder::serving(bound.map(|b| b.is_some())), bound)
    }

    /// Exact number of triples agreeing with the bound positions.
    pub(crate) fn count(&self, bound: [Option<TermId>; 3]) -> usize {
        let order = IndexOrder::serving(bound.map(|b| b.is_some()));
        self.range(order, &Self::prefix(order, bound)).len()
    }

    /// Matches `tp`, serving it from the index chosen by its bound positions.
    pub fn match_pattern(&self, tp: &TriplePattern) -> PatternMatches {
        let bound = tp.terms().map(|t| !t.is_var());
        self.match_pattern_with(IndexOrder::serving(bound), tp)
    }

    /// Matches `tp` through a specific index permutation.
    pub fn match_pattern_with(&self, order: IndexOrder, tp: &TriplePattern) -> PatternMatches {
        let terms = tp.terms();
        let mut bound = [None; 3];
        for (i, t) in terms.iter().enumerate() {
            if !t.is_var() {
                match self.id(t) {
                    Some(id) => bound[i] = Some(id),
                    None => {
                        return PatternMatches {
                            mappings: Vec::new(),
                            count: 0,
                        }
                    }
                }
            }
        }
        let mappings: Vec<SolutionMapping> = self
            .scan_with(order, bound)
            .filter_map(|spo| {
                let mut mu = SolutionMapping::new();
                for (i, t) in terms.iter().enumerate() {
                    if let Term::Variable(name) = t {
                        let value = self.term(spo[i]);
                        match mu.get(name) {
                            Some(prev) if prev != value => return None,
                            Some(_) => {}
                            None => mu.bind(name.clone(), value.clone()).ok()?,
                        }
                    }
                }
                Some(mu)
            })
            .collect();
        PatternMatches {
            count: mappings.len(),
            mappings,
        }
    }
}
