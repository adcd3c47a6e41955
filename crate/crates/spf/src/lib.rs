//! Star pattern fragments over HTTP: the fragment server, HTTP and
//! in-process fragment sources, a seeded data and query generator and the
//! benchmark driver behind the `spf` command.

pub mod datagen;
pub mod querygen;
pub mod server;
pub mod source;
pub mod wire;
pub mod workload;

use std::path::Path;

use anyhow::Context;
use spf_core::{build_graph, parse_ntriples, parse_sparql_select, BgpQuery, Graph};

pub use server::{FragmentServer, ServerConfig, ServerHandle};
pub use source::{HttpSource, LocalSource};

/// Reads an N-Triples file into a graph.
pub fn load_graph(path: &Path) -> anyhow::Result<Graph> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let triples = parse_ntriples(&text).with_context(|| format!("parsing {}", path.display()))?;
    build_graph(triples).with_context(|| format!("loading {}", path.display()))
}

/// Reads one SPARQL SELECT query from a file.
pub fn load_query(path: &Path) -> anyhow::Result<BgpQuery> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_sparql_select(&text).with_context(|| format!("parsing {}", path.display()))
}
