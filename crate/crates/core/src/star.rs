//! Star patterns: triple patterns that share one subject.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::mapping::SolutionMapping;
use crate::term::{Term, Triple, TriplePattern};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StarError {
    #[error("a star pattern needs at least one triple pattern")]
    Empty,
    #[error("pattern {index} has subject {found}, star is rooted at {root}")]
    SubjectMismatch {
        index: usize,
        root: Term,
        found: Term,
    },
    #[error("pattern {0} occurs twice in the star")]
    Duplicate(usize),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StarPattern {
    root: Term,
    patterns: Vec<TriplePattern>,
}

impl StarPattern {
    pub fn new(patterns: Vec<TriplePattern>) -> Result<Self, StarError> {
        let root = patterns.first().ok_or(StarError::Empty)?.subject.clone();
        for (index, tp) in patterns.iter().enumerate() {
            if tp.subject != root {
                return Err(StarError::SubjectMismatch {
                    index,
                    root,
                    found: tp.subject.clone(),
                });
            }
            if patterns[..index].contains(tp) {
                return Err(StarError::Duplicate(index));
            }
        }
        Ok(StarPattern { root, patterns })
    }

    pub fn singleton(tp: TriplePattern) -> Self {
        StarPattern {
            root: tp.subject.clone(),
            patterns: alloc::vec![tp],
        }
    }

    pub fn root(&self) -> &Term {
        &self.root
    }

    pub fn patterns(&self) -> &[TriplePattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Distinct variable names in order of first occurrence.
    pub fn vars(&self) -> Vec<Arc<str>> {
        let mut out: Vec<Arc<str>> = Vec::new();
        for v in self.patterns.iter().flat_map(TriplePattern::vars) {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.patterns
            .iter()
            .flat_map(TriplePattern::vars)
            .any(|v| &**v == name)
    }

    /// The ground triples, if no variables remain.
    pub fn to_triples(&self) -> Option<Vec<Triple>> {
        self.patterns.iter().map(TriplePattern::to_triple).collect()
    }
}

impl fmt::Debug for StarPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.patterns).finish()
    }
}

fn substitute(term: &Term, mu: &SolutionMapping) -> Term {
    match term {
        Term::Variable(name) => mu.get(name).cloned().unwrap_or_else(|| term.clone()),
        other => other.clone(),
    }
}

pub fn apply_to_pattern(mu: &SolutionMapping, tp: &TriplePattern) -> TriplePattern {
    TriplePattern {
        subject: substitute(&tp.subject, mu),
        predicate: substitute(&tp.predicate, mu),
        object: substitute(&tp.object, mu),
    }
}

/// `μ[sp]`: replaces every variable bound in `mu`.
///
/// Pattern order is preserved. Patterns that become identical after
/// substitution collapse to their first occurrence, since `μ[sp]` is a set.
pub fn apply_mapping(mu: &SolutionMapping, sp: &StarPattern) -> StarPattern {
    let mut patterns: Vec<TriplePattern> = Vec::with_capacity(sp.patterns.len());
    for tp in &sp.patterns {
        let applied = apply_to_pattern(mu, tp);
        if !patterns.contains(&applied) {
            patterns.push(applied);
        }
    }
    StarPattern {
        root: substitute(&sp.root, mu),
        patterns,
    }
}
