//! Star decomposition of a basic graph pattern.

use alloc::vec::Vec;

use crate::sparql::BgpQuery;
use crate::star::StarPattern;
use crate::term::{Term, TriplePattern};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarDecomposition {
    pub stars: Vec<StarPattern>,
}

/// Which star-decomposition condition a candidate violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompositionViolation {
    /// More stars than patterns.
    TooManyStars,
    /// A star whose patterns do not share a subject.
    NotAStar(usize),
    /// A query pattern in zero or several stars.
    Coverage(TriplePattern),
    /// A star pattern that is not in the query.
    Foreign(TriplePattern),
}

impl StarDecomposition {
    /// Checks the four defining conditions against `patterns`.
    pub fn check(&self, patterns: &[TriplePattern]) -> Result<(), DecompositionViolation> {
        if self.stars.len() > patterns.len() {
            return Err(DecompositionViolation::TooManyStars);
        }
        for (i, star) in self.stars.iter().enumerate() {
            if star.patterns().iter().any(|tp| &tp.subject != star.root()) {
                return Err(DecompositionViolation::NotAStar(i));
            }
        }
        for tp in patterns {
            let owners = self
                .stars
                .iter()
                .filter(|s| s.patterns().contains(tp))
                .count();
            if owners != 1 {
                return Err(DecompositionViolation::Coverage(tp.clone()));
            }
        }
        for tp in self.stars.iter().flat_map(|s| s.patterns()) {
            if !patterns.contains(tp) {
                return Err(DecompositionViolation::Foreign(tp.clone()));
            }
        }
        Ok(())
    }
}

/// Groups the query's patterns by subject term.
///
/// Stars appear in order of their subject's first occurrence; within a star,
/// patterns keep query order. Constant subjects form stars too, one per
/// distinct constant.
pub fn star_decompose(q: &BgpQuery) -> StarDecomposition {
    let mut groups: Vec<(Term, Vec<TriplePattern>)> = Vec::new();
    for tp in &q.patterns {
        match groups.iter_mut().find(|(root, _)| *root == tp.subject) {
            Some((_, members)) => {
                if !members.contains(tp) {
                    members.push(tp.clone())
                }
            }
            None => groups.push((tp.subject.clone(), alloc::vec![tp.clone()])),
        }
    }
    StarDecomposition {
        stars: groups
            .into_iter()
            .map(|(_, members)| StarPattern::new(members).expect("grouped by subject"))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::sparql::{parse_sparql_select, Projection};
    use proptest::prelude::*;

    #[test]
    fn two_star_query_splits_into_two_stars() {
        let q = parse_sparql_select(TWO_STAR_QUERY).unwrap();
        let d = star_decompose(&q);
        assert_eq!(d.stars, alloc::vec![s1(), s2()]);
        d.check(&q.patterns).unwrap();
    }

    #[test]
    fn chain_gives_singletons() {
        let q = parse_sparql_select("SELECT * { ?x <p> ?y . ?y <q> ?z }").unwrap();
        let d = star_decompose(&q);
        assert_eq!(d.stars.len(), 2);
        assert!(d.stars.iter().all(|s| s.len() == 1));
        assert_eq!(d.stars[1].root(), &term("?y"));
    }

    #[test]
    fn single_pattern() {
        let q = parse_sparql_select("SELECT * { <s> <p> ?o }").unwrap();
        assert_eq!(star_decompose(&q).stars.len(), 1);
    }

    #[test]
    fn check_catches_violations() {
        let q = parse_sparql_select(TWO_STAR_QUERY).unwrap();
        let missing = StarDecomposition {
            stars: alloc::vec![s1()],
        };
        assert!(matches!(
            missing.check(&q.patterns),
            Err(DecompositionViolation::Coverage(_))
        ));
        let foreign = StarDecomposition {
            stars: alloc::vec![s1(), s2(), star(&[("?z", ":p", ":o")])],
        };
        assert!(matches!(
            foreign.check(&q.patterns),
            Err(DecompositionViolation::Foreign(_))
        ));
    }

    fn arb_bgp() -> impl Strategy<Value = BgpQuery> {
        let term = prop_oneof![
            (0u8..4).prop_map(|i| Term::var(&alloc::format!("v{i}")).unwrap()),
            (0u8..3).prop_map(|i| Term::iri(&alloc::format!("http://ex/c{i}")).unwrap()),
        ];
        let pred = (0u8..3).prop_map(|i| Term::iri(&alloc::format!("http://ex/p{i}")).unwrap());
        proptest::collection::vec((term.clone(), pred, term), 1..12).prop_map(|v| {
            let mut patterns: Vec<TriplePattern> = Vec::new();
            for (s, p, o) in v {
                let tp = TriplePattern::new(s, p, o).unwrap();
                if !patterns.contains(&tp) {
                    patterns.push(tp);
                }
            }
            BgpQuery {
                projection: Projection::All,
                distinct: false,
                patterns,
            }
        })
    }

    proptest! {
        #[test]
        fn decomposition_conditions_hold(q in arb_bgp()) {
            let d = star_decompose(&q);
            prop_assert!(d.check(&q.patterns).is_ok());
            let mut roots: Vec<&Term> = d.stars.iter().map(|s| s.root()).collect();
            let n = roots.len();
            roots.sort();
            roots.dedup();
            prop_assert_eq!(roots.len(), n);
        }
    }
}
