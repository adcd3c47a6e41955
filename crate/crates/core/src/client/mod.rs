//! Client-side query processing over a fragment interface.
//!
//! A query is split into units (stars in SPF mode, single patterns in the
//! brTPF and TPF modes), each unit is probed once for its cardinality, and
//! the units are joined in a left-deep pipeline ordered by that estimate.
//! SPF and brTPF ship upstream bindings to the server in batches of at most
//! `max_omega` distinct projected mappings; TPF instantiates the next
//! pattern once per upstream mapping.

mod pipeline;
mod plan;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::fragment::{FragmentPage, SelectorKind, SelectorSpec, MAX_OMEGA};
use crate::mapping::SolutionMapping;
use crate::star::StarPattern;

pub use pipeline::{execute, execute_brtpf, execute_spf, execute_tpf, start, Execution};
pub use plan::{probe_and_order, query_units, PlannedStar, QueryPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Spf,
    Brtpf,
    Tpf,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Spf, Mode::Brtpf, Mode::Tpf];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Spf => "spf",
            Mode::Brtpf => "brtpf",
            Mode::Tpf => "tpf",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spf" => Ok(Mode::Spf),
            "brtpf" => Ok(Mode::Brtpf),
            "tpf" => Ok(Mode::Tpf),
            other => Err(alloc::format!("unknown mode {other:?} (spf, brtpf, tpf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FragmentRequest {
    pub selector: SelectorSpec,
    pub page: usize,
}

/// A page as received, with its transfer cost.
#[derive(Debug, Clone)]
pub struct Fetched {
    pub page: FragmentPage,
    pub request_bytes: u64,
    pub response_bytes: u64,
    /// Microseconds on the source's clock; zero when it has none.
    pub started_us: u64,
    pub finished_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("query timed out")]
    Timeout,
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("malformed response: {0}")]
    Protocol(String),
}

pub type ExecError = SourceError;

/// Anything that can answer fragment requests: an HTTP server, an
/// in-process handler, a test double.
pub trait FragmentSource {
    fn fetch(&mut self, request: &FragmentRequest) -> Result<Fetched, SourceError>;
}

impl<T: FragmentSource + ?Sized> FragmentSource for &mut T {
    fn fetch(&mut self, request: &FragmentRequest) -> Result<Fetched, SourceError> {
        (**self).fetch(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClientConfig {
    pub max_omega: usize,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            max_omega: MAX_OMEGA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestRecord {
    pub kind: SelectorKind,
    pub omega_len: usize,
    pub page: usize,
    /// Cardinality probe issued while planning.
    pub probe: bool,
    pub request_bytes: u64,
    pub response_bytes: u64,
    pub started_us: u64,
    pub finished_us: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequestLog {
    pub records: Vec<RequestRecord>,
}

impl RequestLog {
    /// Number of requests sent to the server.
    pub fn nrs(&self) -> usize {
        self.records.len()
    }

    /// Request plus response body bytes.
    pub fn ntb(&self) -> u64 {
        self.records
            .iter()
            .map(|r| r.request_bytes + r.response_bytes)
            .sum()
    }

    /// Ω sizes of the requests that carried bindings, in issue order,
    /// counting each restricted request sequence once (its first page).
    pub fn omega_batches(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.omega_len > 0 && r.page == 1)
            .map(|r| r.omega_len)
            .collect()
    }
}

/// The selector a client sends for `star` restricted by `omega`.
///
/// Single-pattern stars use the triple-pattern selectors, so a query made
/// only of singleton stars issues exactly the requests of a brTPF client.
pub fn selector_for(star: &StarPattern, omega: Vec<SolutionMapping>) -> SelectorSpec {
    if star.len() == 1 {
        let tp = star.patterns()[0].clone();
        if omega.is_empty() {
            SelectorSpec::Tp(tp)
        } else {
            SelectorSpec::Brtp(tp, omega)
        }
    } else {
        SelectorSpec::Star(star.clone(), omega)
    }
}

/// Restricts each mapping to the variables of `sp`, drops repeats (first
/// occurrence wins) and chunks the result into Ω batches of at most
/// `max_omega` entries.
///
/// If no variable of `sp` is bound by the mappings, a single empty batch
/// is returned: the star is fetched unrestricted and joined as a product.
pub fn project_bindings(
    mappings: &[SolutionMapping],
    sp: &StarPattern,
    max_omega: usize,
) -> Vec<Vec<SolutionMapping>> {
    assert!(max_omega >= 1, "max_omega must be positive");
    let mut distinct: Vec<SolutionMapping> = Vec::new();
    let mut seen = alloc::collections::BTreeSet::new();
    for mu in mappings {
        let projected = mu.project(|v| sp.has_var(v));
        if seen.insert(projected.clone()) {
            distinct.push(projected);
        }
    }
    if distinct.is_empty() {
        return Vec::new();
    }
    if distinct.iter().all(SolutionMapping::is_empty) {
        return alloc::vec![Vec::new()];
    }
    distinct.chunks(max_omega).map(<[_]>::to_vec).collect()
}
