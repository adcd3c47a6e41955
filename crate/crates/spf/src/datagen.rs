//! Seeded synthetic people graph.
//!
//! Every entity has a country, an award and a birth year, 0 to 5 further
//! attributes drawn from ten more predicates, and exactly one outgoing
//! link per link predicate. The fixed link out-degree makes every link
//! pattern `?x link ?y` match exactly one triple per entity, so walks of
//! any length exist from any entity.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spf_core::{Term, Triple};

pub const ENTITY_NS: &str = "http://example.org/entity/";
pub const ONTOLOGY_NS: &str = "http://example.org/ontology/";
pub const RESOURCE_NS: &str = "http://example.org/resource/";

/// Attributes every entity carries.
pub const CORE_PREDICATES: [&str; 3] = ["country", "award", "birthDate"];

/// Optional attributes, with the number of distinct values each takes.
pub const EXTRA_PREDICATES: [(&str, usize); 10] = [
    ("occupation", 12),
    ("genre", 8),
    ("language", 10),
    ("employer", 15),
    ("almaMater", 12),
    ("residence", 20),
    ("party", 6),
    ("religion", 5),
    ("instrument", 9),
    ("team", 14),
];

pub const LINK_PREDICATES: [&str; 3] = ["knows", "follows", "cites"];

const COUNTRIES: usize = 30;
const AWARDS: usize = 25;

pub fn predicate(name: &str) -> Term {
    Term::iri(&format!("{ONTOLOGY_NS}{name}")).expect("valid IRI")
}

pub fn entity(i: usize) -> Term {
    Term::iri(&format!("{ENTITY_NS}e{i}")).expect("valid IRI")
}

fn resource(kind: &str, k: usize) -> Term {
    Term::iri(&format!("{RESOURCE_NS}{kind}{k}")).expect("valid IRI")
}

fn push(out: &mut Vec<Triple>, s: &Term, p: &str, o: Term) {
    out.push(Triple::new(s.clone(), predicate(p), o).expect("generated triples are well formed"));
}

/// Triples for `entities` entities; identical for identical arguments.
pub fn generate_dataset(entities: usize, seed: u64) -> Vec<Triple> {
    assert!(entities >= 1, "at least one entity");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(entities * 9);
    for i in 0..entities {
        let s = entity(i);
        push(&mut out, &s, "country", resource("Country", rng.random_range(0..COUNTRIES)));
        push(&mut out, &s, "award", resource("Award", rng.random_range(0..AWARDS)));
        let year = 1900 + rng.random_range(0..100);
        push(&mut out, &s, "birthDate", Term::literal(&year.to_string()));

        let extras = rng.random_range(0..=5);
        let mut chosen: Vec<&(&str, usize)> = EXTRA_PREDICATES.choose_multiple(&mut rng, extras).collect();
        chosen.sort_by_key(|(p, _)| EXTRA_PREDICATES.iter().position(|(q, _)| q == p));
        for (p, values) in chosen {
            let kind = format!("{}{}", p[..1].to_uppercase(), &p[1..]);
            push(&mut out, &s, p, resource(&kind, rng.random_range(0..*values)));
        }

        for link in LINK_PREDICATES {
            let target = if entities == 1 {
                i
            } else {
                // Any entity but `i`.
                let t = rng.random_range(0..entities - 1);
                if t >= i {
                    t + 1
                } else {
                    t
                }
            };
            push(&mut out, &s, link, entity(target));
        }
    }
    out
}
