//! Star pattern fragments over RDF graphs.
//!
//! This crate holds the allocation-only core of the system: the RDF data
//! model, a dictionary-encoded graph with three sorted index permutations,
//! the triple-pattern, bindings-restricted and star-pattern selector
//! functions with fragment paging, a SPARQL basic graph pattern parser,
//! star decomposition and the left-deep client pipeline that drives a
//! [`client::FragmentSource`].
//!
//! Everything that touches sockets, files or clocks lives in the `spf`
//! companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod client;
pub mod decompose;
pub mod fragment;
pub mod graph;
pub mod mapping;
pub mod ntriples;
pub mod oracle;
pub mod sparql;
pub mod star;
pub mod term;

#[cfg(test)]
pub(crate) mod fixtures;

pub use client::{
    execute, execute_brtpf, execute_spf, execute_tpf, probe_and_order, project_bindings, start,
    ClientConfig, ExecError, Execution, Fetched, FragmentRequest, FragmentSource, Mode,
    QueryPlan, RequestLog, RequestRecord, SourceError,
};
pub use decompose::{star_decompose, StarDecomposition};
pub use fragment::{
    make_fragment, paginate, select_star, select_triple_pattern, Control, Fragment,
    FragmentPage, PageMetadata, SelectorKind, SelectorSpec, TripleGroup, DEFAULT_PAGE_SIZE,
    MAX_OMEGA,
};
pub use graph::{build_graph, Graph, IndexOrder};
pub use mapping::SolutionMapping;
pub use ntriples::{parse_ntriples, serialize_ntriples, NTriplesError};
pub use sparql::{parse_sparql_select, BgpQuery, Projection, SparqlError};
pub use star::{apply_mapping, StarPattern};
pub use term::{Term, TermError, TermKind, Triple, TriplePattern};
