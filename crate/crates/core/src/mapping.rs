//! Solution mappings: partial functions from variables to ground terms.

use alloc::collections::btree_map::{self, BTreeMap};
use alloc::sync::Arc;
use core::fmt;

use crate::term::{Term, TermError, TermKind};

/// A partial mapping from variable names to ground terms.
///
/// Keys are bare variable names (no leading `?`). Iteration is in name
/// order, which keeps encodings deterministic.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SolutionMapping(BTreeMap<Arc<str>, Term>);

impl SolutionMapping {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `var` to `value`, replacing any previous binding.
    pub fn bind(&mut self, var: impl Into<Arc<str>>, value: Term) -> Result<(), TermError> {
        if value.kind() == TermKind::Variable {
            return Err(TermError::Position {
                what: "mapping",
                position: "value",
                kind: TermKind::Variable,
            });
        }
        self.0.insert(var.into(), value);
        Ok(())
    }

    pub fn with(mut self, var: &str, value: Term) -> Self {
        self.bind(var, value).expect("ground binding");
        self
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Arc<str>, Term> {
        self.0.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Arc<str>> {
        self.0.keys()
    }

    /// `self ⊆ other`: every binding of `self` appears identically in `other`.
    pub fn is_subset_of(&self, other: &SolutionMapping) -> bool {
        self.0.len() <= other.0.len()
            && self.0.iter().all(|(k, v)| other.0.get(k) == Some(v))
    }

    /// True when the two mappings agree on every shared variable.
    pub fn compatible(&self, other: &SolutionMapping) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .0
            .iter()
            .all(|(k, v)| large.0.get(k).is_none_or(|w| w == v))
    }

    /// Union of two compatible mappings; `None` if they disagree.
    pub fn merge(&self, other: &SolutionMapping) -> Option<SolutionMapping> {
        if !self.compatible(other) {
            return None;
        }
        let mut out = self.clone();
        for (k, v) in &other.0 {
            out.0.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Some(out)
    }

    /// Restriction to the variables accepted by `keep`.
    pub fn project<F: Fn(&str) -> bool>(&self, keep: F) -> SolutionMapping {
        SolutionMapping(
            self.0
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

impl FromIterator<(Arc<str>, Term)> for SolutionMapping {
    /// Collects bindings; variable-valued entries are dropped.
    fn from_iter<I: IntoIterator<Item = (Arc<str>, Term)>>(iter: I) -> Self {
        SolutionMapping(iter.into_iter().filter(|(_, v)| !v.is_var()).collect())
    }
}

impl<'a> IntoIterator for &'a SolutionMapping {
    type Item = (&'a Arc<str>, &'a Term);
    type IntoIter = btree_map::Iter<'a, Arc<str>, Term>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Debug for SolutionMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "?{k}→{v}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Term {
        Term::iri(s).unwrap()
    }

    #[test]
    fn subset_and_merge() {
        let small = SolutionMapping::new().with("a", iri("X"));
        let big = small.clone().with("p", iri("bob"));
        assert!(small.is_subset_of(&big));
        assert!(!big.is_subset_of(&small));
        assert!(SolutionMapping::new().is_subset_of(&small));

        let other = SolutionMapping::new().with("a", iri("Y"));
        assert!(!other.compatible(&big));
        assert!(other.merge(&big).is_none());
        let merged = small.merge(&SolutionMapping::new().with("q", iri("Z"))).unwrap();
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn refuses_variable_values() {
        let mut m = SolutionMapping::new();
        assert!(m.bind("x", Term::var("y").unwrap()).is_err());
        assert!(m.is_empty());
    }
}
