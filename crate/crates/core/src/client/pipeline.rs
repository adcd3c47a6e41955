//! The left-deep join pipeline.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::plan::fetch_logged;
use super::{
    probe_and_order, query_units, selector_for, ClientConfig, FragmentRequest, FragmentSource,
    Mode, QueryPlan, RequestLog, SourceError,
};
use crate::fragment::{FragmentPage, SelectorSpec, TripleGroup};
use crate::mapping::SolutionMapping;
use crate::sparql::BgpQuery;
use crate::star::{apply_to_pattern, StarPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StageKind {
    /// The outermost unit: streams its own fragment page by page.
    Scan,
    /// Block nested loop over Ω batches of projected upstream mappings.
    Restricted,
    /// One instantiated request sequence per upstream mapping.
    PerBinding,
}

struct Stage {
    kind: StageKind,
    star: StarPattern,
    /// Unrestricted page 1 from the probe, reused for any Ω-free request
    /// of the same selector.
    probe: FragmentPage,
    /// Variables shared with the upstream stages.
    shared: Vec<Arc<str>>,
    out: VecDeque<SolutionMapping>,
    next_page: Option<usize>,
    /// Projection of upstream mappings → matching mappings of this star.
    cache: BTreeMap<SolutionMapping, Vec<SolutionMapping>>,
    carry: Option<SolutionMapping>,
    upstream_done: bool,
}

enum State {
    Pending(Mode, Vec<StarPattern>),
    Running(Vec<Stage>),
    Finished,
}

/// A running query. Iterating yields result rows as soon as they are
/// joined; the request log stays available after completion or failure.
pub struct Execution<'s, S: FragmentSource + ?Sized> {
    source: &'s mut S,
    config: ClientConfig,
    log: RequestLog,
    state: State,
    result_vars: Vec<Arc<str>>,
    distinct: bool,
    seen: BTreeSet<SolutionMapping>,
}

/// Starts `q` in `mode`. Probing happens on the first call to `next`.
pub fn start<'s, S: FragmentSource + ?Sized>(
    q: &BgpQuery,
    mode: Mode,
    source: &'s mut S,
    config: ClientConfig,
) -> Execution<'s, S> {
    Execution {
        source,
        config,
        log: RequestLog::default(),
        state: State::Pending(mode, query_units(q, mode)),
        result_vars: q.result_vars(),
        distinct: q.distinct,
        seen: BTreeSet::new(),
    }
}

/// Runs an already probed plan; `log` holds the probe requests.
pub fn execute<'s, S: FragmentSource + ?Sized>(
    plan: QueryPlan,
    q: &BgpQuery,
    source: &'s mut S,
    log: RequestLog,
    config: ClientConfig,
) -> Execution<'s, S> {
    Execution {
        source,
        config,
        log,
        state: State::Running(stages(plan)),
        result_vars: q.result_vars(),
        distinct: q.distinct,
        seen: BTreeSet::new(),
    }
}

pub fn execute_spf<'s, S: FragmentSource + ?Sized>(
    q: &BgpQuery,
    source: &'s mut S,
    config: ClientConfig,
) -> Execution<'s, S> {
    start(q, Mode::Spf, source, config)
}

pub fn execute_brtpf<'s, S: FragmentSource + ?Sized>(
    q: &BgpQuery,
    source: &'s mut S,
    config: ClientConfig,
) -> Execution<'s, S> {
    start(q, Mode::Brtpf, source, config)
}

pub fn execute_tpf<'s, S: FragmentSource + ?Sized>(
    q: &BgpQuery,
    source: &'s mut S,
    config: ClientConfig,
) -> Execution<'s, S> {
    start(q, Mode::Tpf, source, config)
}

fn stages(plan: QueryPlan) -> Vec<Stage> {
    let mut upstream_vars: Vec<Arc<str>> = Vec::new();
    let mut out = Vec::with_capacity(plan.stars.len());
    for (i, planned) in plan.stars.into_iter().enumerate() {
        let vars = planned.star.vars();
        let kind = match (i, plan.mode) {
            (0, _) => StageKind::Scan,
            (_, Mode::Tpf) => StageKind::PerBinding,
            _ => StageKind::Restricted,
        };
        let shared = vars
            .iter()
            .filter(|v| upstream_vars.contains(v))
            .cloned()
            .collect();
        for v in vars {
            if !upstream_vars.contains(&v) {
                upstream_vars.push(v);
            }
        }
        let (buffer, next_page) = if kind == StageKind::Scan {
            (
                planned.first_page.groups.iter().map(|g| g.mapping.clone()).collect(),
                planned.first_page.next_page(),
            )
        } else {
            (VecDeque::new(), None)
        };
        out.push(Stage {
            kind,
            star: planned.star,
            probe: planned.first_page,
            shared,
            out: buffer,
            next_page,
            cache: BTreeMap::new(),
            carry: None,
            upstream_done: false,
        });
    }
    out
}

impl<'s, S: FragmentSource + ?Sized> Execution<'s, S> {
    pub fn log(&self) -> &RequestLog {
        &self.log
    }

    pub fn into_log(self) -> RequestLog {
        self.log
    }

    /// Drains the remaining rows, stopping at the first error.
    pub fn collect_rows(&mut self) -> Result<Vec<SolutionMapping>, SourceError> {
        self.by_ref().collect()
    }

    fn fetch(&mut self, selector: SelectorSpec, page: usize) -> Result<FragmentPage, SourceError> {
        let request = FragmentRequest { selector, page };
        fetch_logged(self.source, &mut self.log, &request, false)
    }

    /// All groups of a request sequence, following next-page controls.
    fn fetch_all(
        &mut self,
        selector: SelectorSpec,
        first: Option<FragmentPage>,
    ) -> Result<Vec<TripleGroup>, SourceError> {
        let mut page = match first {
            Some(p) => p,
            None => self.fetch(selector.clone(), 1)?,
        };
        let mut groups = core::mem::take(&mut page.groups);
        while let Some(next) = page.next_page() {
            page = self.fetch(selector.clone(), next)?;
            groups.append(&mut page.groups);
        }
        Ok(groups)
    }

    fn pull(&mut self, stages: &mut [Stage], i: usize) -> Result<Option<SolutionMapping>, SourceError> {
        match stages[i].kind {
            StageKind::Scan => self.pull_scan(&mut stages[i]),
            StageKind::Restricted => self.pull_restricted(stages, i),
            StageKind::PerBinding => self.pull_per_binding(stages, i),
        }
    }

    fn pull_scan(&mut self, stage: &mut Stage) -> Result<Option<SolutionMapping>, SourceError> {
        loop {
            if let Some(m) = stage.out.pop_front() {
                return Ok(Some(m));
            }
            let Some(page_no) = stage.next_page else {
                return Ok(None);
            };
            let page = self.fetch(selector_for(&stage.star, Vec::new()), page_no)?;
            stage.next_page = page.next_page();
            stage.out.extend(page.groups.into_iter().map(|g| g.mapping));
        }
    }

    fn pull_restricted(
        &mut self,
        stages: &mut [Stage],
        i: usize,
    ) -> Result<Option<SolutionMapping>, SourceError> {
        let max_omega = self.config.max_omega.max(1);
        loop {
            if let Some(m) = stages[i].out.pop_front() {
                return Ok(Some(m));
            }
            if stages[i].upstream_done && stages[i].carry.is_none() {
                return Ok(None);
            }

            // Gather upstream mappings until the batch of new projections is
            // full; mappings whose projection was already fetched join at once.
            let mut block: Vec<(SolutionMapping, SolutionMapping)> = Vec::new();
            let mut fresh: Vec<SolutionMapping> = Vec::new();
            loop {
                let m = match stages[i].carry.take() {
                    Some(m) => m,
                    None => match self.pull(&mut stages[..i], i - 1)? {
                        Some(m) => m,
                        None => {
                            stages[i].upstream_done = true;
                            break;
                        }
                    },
                };
                let stage = &mut stages[i];
                let key = m.project(|v| stage.shared.iter().any(|s| &**s == v));
                if let Some(matches) = stage.cache.get(&key) {
                    stage
                        .out
                        .extend(matches.iter().filter_map(|r| m.merge(r)));
                    continue;
                }
                if !fresh.contains(&key) {
                    if fresh.len() == max_omega {
                        stage.carry = Some(m);
                        break;
                    }
                    fresh.push(key.clone());
                }
                block.push((key, m));
            }

            if fresh.is_empty() {
                continue;
            }
            let star = stages[i].star.clone();
            let (selector, first) = if stages[i].shared.is_empty() {
                (selector_for(&star, Vec::new()), Some(stages[i].probe.clone()))
            } else {
                (selector_for(&star, fresh.clone()), None)
            };
            let groups = self.fetch_all(selector, first)?;
            let stage = &mut stages[i];
            for key in fresh {
                stage.cache.insert(key, Vec::new());
            }
            for g in groups {
                let key = g.mapping.project(|v| stage.shared.iter().any(|s| &**s == v));
                if let Some(bucket) = stage.cache.get_mut(&key) {
                    bucket.push(g.mapping);
                }
            }
            for (key, m) in block {
                let matches = &stage.cache[&key];
                stage.out.extend(matches.iter().filter_map(|r| m.merge(r)));
            }
        }
    }

    fn pull_per_binding(
        &mut self,
        stages: &mut [Stage],
        i: usize,
    ) -> Result<Option<SolutionMapping>, SourceError> {
        loop {
            if let Some(m) = stages[i].out.pop_front() {
                return Ok(Some(m));
            }
            let Some(m) = self.pull(&mut stages[..i], i - 1)? else {
                return Ok(None);
            };
            let original = stages[i].star.patterns()[0].clone();
            let instantiated = apply_to_pattern(&m, &original);
            let first = (instantiated == original).then(|| stages[i].probe.clone());
            let groups = self.fetch_all(SelectorSpec::Tp(instantiated), first)?;
            stages[i]
                .out
                .extend(groups.iter().filter_map(|g| m.merge(&g.mapping)));
        }
    }

    fn step(&mut self) -> Result<Option<SolutionMapping>, SourceError> {
        loop {
            let mut stages = match core::mem::replace(&mut self.state, State::Finished) {
                State::Finished => return Ok(None),
                State::Pending(mode, units) => {
                    let plan = probe_and_order(units, mode, self.source, &mut self.log)?;
                    stages(plan)
                }
                State::Running(stages) => stages,
            };
            if stages.is_empty() {
                return Ok(None);
            }
            let last = stages.len() - 1;
            let row = self.pull(&mut stages, last)?;
            let Some(full) = row else {
                return Ok(None);
            };
            self.state = State::Running(stages);
            let row = full.project(|v| self.result_vars.iter().any(|k| &**k == v));
            if self.distinct && !self.seen.insert(row.clone()) {
                continue;
            }
            return Ok(Some(row));
        }
    }
}

impl<S: FragmentSource + ?Sized> Iterator for Execution<'_, S> {
    type Item = Result<SolutionMapping, SourceError>;

    fn next(&mut self) -> Option<Self::Item> {
        // `step` leaves the state Finished on error and on exhaustion.
        self.step().transpose()
    }
}
