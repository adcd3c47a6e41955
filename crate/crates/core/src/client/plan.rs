use alloc::vec::Vec;

use super::{selector_for, FragmentRequest, FragmentSource, Mode, RequestLog, RequestRecord, SourceError};
use crate::decompose::star_decompose;
use crate::fragment::FragmentPage;
use crate::sparql::BgpQuery;
use crate::star::StarPattern;

#[derive(Debug, Clone)]
pub struct PlannedStar {
    pub star: StarPattern,
    /// Position in the unordered unit list.
    pub index: usize,
    pub estimate: usize,
    /// Page 1 of the unrestricted fragment, kept from the probe.
    pub first_page: FragmentPage,
}

/// Units in join order: ascending estimate, ties by original position.
#[derive(Debug, Clone)]
pub struct QueryPlan {
    pub mode: Mode,
    pub stars: Vec<PlannedStar>,
}

/// Join units for `mode`: the star decomposition for SPF, one singleton
/// star per triple pattern otherwise.
pub fn query_units(q: &BgpQuery, mode: Mode) -> Vec<StarPattern> {
    match mode {
        Mode::Spf => star_decompose(q).stars,
        Mode::Brtpf | Mode::Tpf => q
            .patterns
            .iter()
            .cloned()
            .map(StarPattern::singleton)
            .collect(),
    }
}

pub(super) fn fetch_logged<S: FragmentSource + ?Sized>(
    source: &mut S,
    log: &mut RequestLog,
    request: &FragmentRequest,
    probe: bool,
) -> Result<FragmentPage, SourceError> {
    let fetched = source.fetch(request)?;
    log.records.push(RequestRecord {
        kind: request.selector.kind(),
        omega_len: request.selector.omega().len(),
        page: request.page,
        probe,
        request_bytes: fetched.request_bytes,
        response_bytes: fetched.response_bytes,
        started_us: fetched.started_us,
        finished_us: fetched.finished_us,
    });
    Ok(fetched.page)
}

/// Requests page 1 of every unit without bindings and orders the units by
/// the reported cardinality.
pub fn probe_and_order<S: FragmentSource + ?Sized>(
    units: Vec<StarPattern>,
    mode: Mode,
    source: &mut S,
    log: &mut RequestLog,
) -> Result<QueryPlan, SourceError> {
    let mut stars = Vec::with_capacity(units.len());
    for (index, star) in units.into_iter().enumerate() {
        let request = FragmentRequest {
            selector: selector_for(&star, Vec::new()),
            page: 1,
        };
        let first_page = fetch_logged(source, log, &request, true)?;
        stars.push(PlannedStar {
            estimate: first_page.metadata.cnt,
            star,
            index,
            first_page,
        });
    }
    stars.sort_by_key(|s| (s.estimate, s.index));
    Ok(QueryPlan { mode, stars })
}
