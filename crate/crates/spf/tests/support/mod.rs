//! Fixtures and server helpers shared by the spf integration tests.
#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use spf::querygen::{generate_queries, GeneratedQuery, Load};
use spf::server::spawn;
use spf::{FragmentServer, ServerHandle};
use spf_core::{build_graph, parse_ntriples, parse_sparql_select, BgpQuery, Graph, SolutionMapping, Term};

pub const G0_NT: &str = "\
<http://ex/alice> <http://ex/country> <http://ex/Germany> .
<http://ex/alice> <http://ex/award> <http://ex/X> .
<http://ex/alice> <http://ex/birthDate> \"1970\" .
<http://ex/bob> <http://ex/country> <http://ex/Norway> .
<http://ex/bob> <http://ex/award> <http://ex/X> .
<http://ex/bob> <http://ex/birthDate> \"1980\" .
<http://ex/carol> <http://ex/country> <http://ex/Norway> .
<http://ex/carol> <http://ex/award> <http://ex/Y> .
<http://ex/carol> <http://ex/birthDate> \"1975\" .
";

pub const TWO_STAR_QUERY: &str = "PREFIX : <http://ex/>
SELECT DISTINCT * WHERE {
  ?p1 :country :Germany .
  ?p1 :award ?a .
  ?p1 :birthDate ?bd1 .
  ?p2 :country :Norway .
  ?p2 :award ?a .
  ?p2 :birthDate ?bd2
}";

pub fn g0() -> Graph {
    build_graph(parse_ntriples(G0_NT).unwrap()).unwrap()
}

pub fn two_star_query() -> BgpQuery {
    parse_sparql_select(TWO_STAR_QUERY).unwrap()
}

pub fn ex(local: &str) -> Term {
    Term::iri(&format!("http://ex/{local}")).unwrap()
}

/// The single answer of the two-star query over G0.
pub fn two_star_answer() -> SolutionMapping {
    SolutionMapping::new()
        .with("p1", ex("alice"))
        .with("a", ex("X"))
        .with("bd1", Term::literal("1970"))
        .with("p2", ex("bob"))
        .with("bd2", Term::literal("1980"))
}

/// Serves `datasets` on a free loopback port with the default limits.
pub fn serve(datasets: Vec<(&str, Graph)>) -> ServerHandle {
    let mut server = FragmentServer::with_defaults();
    for (name, g) in datasets {
        server.add_dataset(name, Arc::new(g));
    }
    spawn(server, SocketAddr::from(([127, 0, 0, 1], 0)), None).unwrap()
}

pub fn sorted(mut rows: Vec<SolutionMapping>) -> Vec<SolutionMapping> {
    rows.sort();
    rows
}

pub fn load_queries(load: Load, count: usize, g: &Graph, seed: u64) -> Vec<GeneratedQuery> {
    generate_queries(load, count, g, seed).unwrap()
}
