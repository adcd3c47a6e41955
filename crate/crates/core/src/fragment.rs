//! Selector functions, fragments and paging.
//!
//! Three selectors are served: a single triple pattern (TPF), a triple
//! pattern restricted by a sequence of solution mappings Ω (brTPF), and a
//! star pattern restricted by Ω (SPF). The first two are evaluated as the
//! third over a singleton star.
//!
//! A group is selected under Ω when its mapping μ extends some μ′ ∈ Ω
//! (`μ′ ⊆ μ`). Since μ binds exactly the star's variables, a μ′ binding any
//! other variable selects nothing; clients project Ω before sending it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::{Graph, IndexOrder, TermId};
use crate::mapping::SolutionMapping;
use crate::star::StarPattern;
use crate::term::{Term, Triple, TriplePattern};

/// Largest Ω a request may carry unless configured otherwise.
pub const MAX_OMEGA: usize = 30;
/// Groups per fragment page unless configured otherwise.
pub const DEFAULT_PAGE_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SelectorKind {
    Tp,
    Brtp,
    Star,
}

impl SelectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectorKind::Tp => "tp",
            SelectorKind::Brtp => "brtp",
            SelectorKind::Star => "star",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectorError {
    #[error("bindings sequence has {len} entries, limit maxOmega is {max}")]
    OmegaTooLarge { len: usize, max: usize },
    #[error("star has {len} patterns, limit maxStarSize is {max}")]
    StarTooLarge { len: usize, max: usize },
    #[error("binding {0} repeats an earlier binding")]
    DuplicateBinding(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SelectorSpec {
    Tp(TriplePattern),
    Brtp(TriplePattern, Vec<SolutionMapping>),
    Star(StarPattern, Vec<SolutionMapping>),
}

impl SelectorSpec {
    pub fn kind(&self) -> SelectorKind {
        match self {
            SelectorSpec::Tp(_) => SelectorKind::Tp,
            SelectorSpec::Brtp(..) => SelectorKind::Brtp,
            SelectorSpec::Star(..) => SelectorKind::Star,
        }
    }

    pub fn omega(&self) -> &[SolutionMapping] {
        match self {
            SelectorSpec::Tp(_) => &[],
            SelectorSpec::Brtp(_, omega) | SelectorSpec::Star(_, omega) => omega,
        }
    }

    /// The selector's pattern viewed as a star.
    pub fn star(&self) -> StarPattern {
        match self {
            SelectorSpec::Tp(tp) | SelectorSpec::Brtp(tp, _) => StarPattern::singleton(tp.clone()),
            SelectorSpec::Star(sp, _) => sp.clone(),
        }
    }

    pub fn star_len(&self) -> usize {
        match self {
            SelectorSpec::Star(sp, _) => sp.len(),
            _ => 1,
        }
    }

    pub fn validate(&self, max_omega: usize, max_star: usize) -> Result<(), SelectorError> {
        let omega = self.omega();
        if omega.len() > max_omega {
            return Err(SelectorError::OmegaTooLarge {
                len: omega.len(),
                max: max_omega,
            });
        }
        if self.star_len() > max_star {
            return Err(SelectorError::StarTooLarge {
                len: self.star_len(),
                max: max_star,
            });
        }
        for (i, mu) in omega.iter().enumerate() {
            if omega[..i].contains(mu) {
                return Err(SelectorError::DuplicateBinding(i));
            }
        }
        Ok(())
    }
}

/// Matching triples `μ[sp]` together with the mapping μ that produced them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleGroup {
    pub mapping: SolutionMapping,
    pub triples: Vec<Triple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Control {
    /// Collection-level control shared by every fragment of a dataset.
    Collection { template: String },
    /// Where selectors of this kind are submitted.
    Form { kind: SelectorKind, target: String },
    NextPage { page: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub source_uri: String,
    pub selector: SelectorSpec,
    pub groups: Vec<TripleGroup>,
    /// Cardinality estimate; exact here.
    pub cnt: usize,
    pub controls: Vec<Control>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PageMetadata {
    pub cnt: usize,
    pub page: usize,
    pub page_size: usize,
    pub has_next: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentPage {
    pub page_uri: String,
    pub fragment_uri: String,
    pub selector: SelectorSpec,
    pub groups: Vec<TripleGroup>,
    pub metadata: PageMetadata,
    pub controls: Vec<Control>,
}

impl FragmentPage {
    pub fn next_page(&self) -> Option<usize> {
        self.controls.iter().find_map(|c| match c {
            Control::NextPage { page } => Some(*page),
            _ => None,
        })
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Const(TermId),
    Var(usize),
}

/// A star pattern resolved against a graph's dictionary.
struct CompiledStar {
    vars: Vec<alloc::sync::Arc<str>>,
    patterns: Vec<[Slot; 3]>,
    /// Key order each pattern is ranked by (its own serving index).
    orders: Vec<IndexOrder>,
}

impl CompiledStar {
    /// `None` when a constant does not occur in the graph.
    fn new(g: &Graph, sp: &StarPattern) -> Option<Self> {
        let vars = sp.vars();
        let mut patterns = Vec::with_capacity(sp.len());
        let mut orders = Vec::with_capacity(sp.len());
        for tp in sp.patterns() {
            let mut slots = [Slot::Var(0); 3];
            for (i, t) in tp.terms().into_iter().enumerate() {
                slots[i] = match t {
                    Term::Variable(name) => {
                        Slot::Var(vars.iter().position(|v| v == name).expect("star var"))
                    }
                    other => Slot::Const(g.id(other)?),
                };
            }
            orders.push(IndexOrder::serving(slots.map(|s| matches!(s, Slot::Const(_)))));
            patterns.push(slots);
        }
        Some(CompiledStar {
            vars,
            patterns,
            orders,
        })
    }

    fn bound(&self, pattern: usize, binding: &[Option<TermId>]) -> [Option<TermId>; 3] {
        self.patterns[pattern].map(|s| match s {
            Slot::Const(id) => Some(id),
            Slot::Var(v) => binding[v],
        })
    }
}

/// One solution: variable ids plus the triple matched by each pattern.
struct Solution {
    binding: Vec<TermId>,
    matched: Vec<[TermId; 3]>,
}

struct Search<'g> {
    g: &'g Graph,
    star: &'g CompiledStar,
    binding: Vec<Option<TermId>>,
    matched: Vec<[TermId; 3]>,
    done: Vec<bool>,
    out: Vec<Solution>,
}

impl Search<'_> {
    /// Resolves the remaining pattern with the fewest candidates first.
    fn run(&mut self, remaining: usize) {
        if remaining == 0 {
            self.out.push(Solution {
                binding: self.binding.iter().map(|b| b.expect("all bound")).collect(),
                matched: self.matched.clone(),
            });
            return;
        }
        let Some(next) = (0..self.star.patterns.len())
            .filter(|&i| !self.done[i])
            .min_by_key(|&i| self.g.count(self.star.bound(i, &self.binding)))
        else {
            return;
        };
        let bound = self.star.bound(next, &self.binding);
        let candidates: Vec<[TermId; 3]> = self.g.scan(bound).collect();
        self.done[next] = true;
        for spo in candidates {
            let saved = self.binding.clone();
            let consistent = self.star.patterns[next]
                .iter()
                .zip(spo)
                .all(|(slot, id)| match *slot {
                    Slot::Const(c) => c == id,
                    Slot::Var(v) => match self.binding[v] {
                        Some(b) => b == id,
                        None => {
                            self.binding[v] = Some(id);
                            true
                        }
                    },
                });
            if consistent {
                self.matched[next] = spo;
                self.run(remaining - 1);
            }
            self.binding = saved;
        }
        self.done[next] = false;
    }
}

fn solve(g: &Graph, star: &CompiledStar, initial: Vec<Option<TermId>>, out: &mut Vec<Solution>) {
    let n = star.patterns.len();
    let mut search = Search {
        g,
        star,
        binding: initial,
        matched: alloc::vec![[0; 3]; n],
        done: alloc::vec![false; n],
        out: Vec::new(),
    };
    search.run(n);
    out.append(&mut search.out);
}

/// Translates μ′ into initial variable ids; `None` if no group can extend it.
fn seed(g: &Graph, star: &CompiledStar, mu: &SolutionMapping) -> Option<Vec<Option<TermId>>> {
    let mut initial = alloc::vec![None; star.vars.len()];
    for (var, value) in mu {
        let slot = star.vars.iter().position(|v| v == var)?;
        initial[slot] = Some(g.id(value)?);
    }
    Some(initial)
}

/// The star-pattern selector `s_(sp,Ω)(G)`.
///
/// Groups come out ordered by the matched triple of each pattern in turn,
/// each compared in the key order of the index serving that pattern; this
/// order does not depend on Ω or on the evaluation strategy.
pub fn select_star(g: &Graph, sp: &StarPattern, omega: &[SolutionMapping]) -> Vec<TripleGroup> {
    let Some(star) = CompiledStar::new(g, sp) else {
        return Vec::new();
    };
    let mut solutions = Vec::new();
    if omega.is_empty() {
        solve(g, &star, alloc::vec![None; star.vars.len()], &mut solutions);
    } else {
        for mu in omega {
            if let Some(initial) = seed(g, &star, mu) {
                solve(g, &star, initial, &mut solutions);
            }
        }
    }
    let rank = |s: &Solution| -> Vec<[TermId; 3]> {
        s.matched
            .iter()
            .zip(&star.orders)
            .map(|(&spo, order)| order.key(spo))
            .collect()
    };
    let mut ranked: Vec<(Vec<[TermId; 3]>, Solution)> =
        solutions.into_iter().map(|s| (rank(&s), s)).collect();
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.binding.cmp(&b.1.binding)));
    ranked.dedup_by(|a, b| a.1.binding == b.1.binding);
    ranked
        .into_iter()
        .map(|(_, s)| {
            let mapping = star
                .vars
                .iter()
                .zip(&s.binding)
                .map(|(v, &id)| (v.clone(), g.term(id).clone()))
                .collect();
            let mut triples: Vec<Triple> = Vec::with_capacity(s.matched.len());
            for &spo in &s.matched {
                let t = g.triple(spo);
                if !triples.contains(&t) {
                    triples.push(t);
                }
            }
            TripleGroup { mapping, triples }
        })
        .collect()
}

/// TPF (Ω empty) and brTPF (Ω non-empty) selection, as a singleton star.
pub fn select_triple_pattern(
    g: &Graph,
    tp: &TriplePattern,
    omega: &[SolutionMapping],
) -> Vec<TripleGroup> {
    select_star(g, &StarPattern::singleton(tp.clone()), omega)
}

pub fn select(g: &Graph, selector: &SelectorSpec) -> Vec<TripleGroup> {
    match selector {
        SelectorSpec::Tp(tp) => select_triple_pattern(g, tp, &[]),
        SelectorSpec::Brtp(tp, omega) => select_triple_pattern(g, tp, omega),
        SelectorSpec::Star(sp, omega) => select_star(g, sp, omega),
    }
}

/// The part of a URI before its query or fragment.
fn base_of(uri: &str) -> &str {
    uri.split(['?', '#']).next().unwrap_or(uri)
}

pub fn make_fragment(source_uri: &str, selector: SelectorSpec, g: &Graph) -> Fragment {
    let groups = select(g, &selector);
    let base = base_of(source_uri);
    let controls = alloc::vec![
        Control::Collection {
            template: format!("{base}{{?s,p,o,page}}"),
        },
        Control::Form {
            kind: selector.kind(),
            target: String::from(base),
        },
    ];
    Fragment {
        source_uri: String::from(source_uri),
        selector,
        cnt: groups.len(),
        groups,
        controls,
    }
}

/// Page `page` (1-based) of `f`. Pages past the end are empty.
///
/// # Panics
///
/// If `page` or `page_size` is zero.
pub fn paginate(f: &Fragment, page: usize, page_size: usize) -> FragmentPage {
    assert!(page >= 1, "pages are numbered from 1");
    assert!(page_size >= 1, "page size must be positive");
    let start = (page - 1).saturating_mul(page_size).min(f.groups.len());
    let end = start.saturating_add(page_size).min(f.groups.len());
    let has_next = end < f.groups.len();
    let mut controls = f.controls.clone();
    if has_next {
        controls.push(Control::NextPage { page: page + 1 });
    }
    let sep = if f.source_uri.contains('?') { '&' } else { '?' };
    FragmentPage {
        page_uri: format!("{}{sep}page={page}", f.source_uri),
        fragment_uri: f.source_uri.clone(),
        selector: f.selector.clone(),
        groups: f.groups[start..end].to_vec(),
        metadata: PageMetadata {
            cnt: f.cnt,
            page,
            page_size,
            has_next,
        },
        controls,
    }
}
