//! Concurrent workload driver and metric report.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use spf_core::{start, BgpQuery, ClientConfig, FragmentSource, Mode, RequestLog, SolutionMapping, SourceError};

use crate::source::{HttpSource, LocalSource};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

/// A fragment source that can enforce a per-query deadline.
pub trait TimedSource: FragmentSource {
    fn set_deadline(&mut self, deadline: Option<Instant>);
}

impl TimedSource for HttpSource {
    fn set_deadline(&mut self, deadline: Option<Instant>) {
        HttpSource::set_deadline(self, deadline)
    }
}

impl TimedSource for LocalSource {
    fn set_deadline(&mut self, deadline: Option<Instant>) {
        LocalSource::set_deadline(self, deadline)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkloadConfig {
    pub mode: String,
    pub clients: usize,
    pub queries_per_client: usize,
    pub load: String,
    pub timeout_secs: u64,
    pub server: String,
    pub seed: u64,
}

/// Outcome of one query execution.
#[derive(Debug, Clone)]
pub struct QueryRun {
    pub rows: Vec<SolutionMapping>,
    pub log: RequestLog,
    pub qet: Duration,
    /// Time to the first row; equals `qet` when there is none.
    pub qrt: Duration,
    pub timed_out: bool,
    pub error: Option<String>,
}

/// Runs `q` to completion (or deadline) and times it.
pub fn run_query<S: TimedSource + ?Sized>(
    source: &mut S,
    q: &BgpQuery,
    mode: Mode,
    timeout: Duration,
    config: ClientConfig,
) -> QueryRun {
    let started = Instant::now();
    source.set_deadline(Some(started + timeout));
    let mut first: Option<Duration> = None;
    let mut rows = Vec::new();
    let mut failure = None;
    let mut exec = start(q, mode, &mut *source, config);
    for row in exec.by_ref() {
        match row {
            Ok(r) => {
                first.get_or_insert_with(|| started.elapsed());
                rows.push(r);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let log = exec.into_log();
    let qet = started.elapsed();
    source.set_deadline(None);
    QueryRun {
        rows,
        log,
        qet,
        qrt: first.unwrap_or(qet),
        timed_out: failure == Some(SourceError::Timeout),
        error: failure.filter(|e| *e != SourceError::Timeout).map(|e| e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryMetrics {
    pub client: usize,
    pub seq: usize,
    pub query: String,
    pub nrs: usize,
    pub ntb: u64,
    pub qet_ms: f64,
    pub qrt_ms: f64,
    pub results: usize,
    pub timed_out: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Aggregates {
    pub queries: usize,
    pub completed: usize,
    pub timed_out: usize,
    pub failed: usize,
    pub wall_seconds: f64,
    /// Completed queries per minute of wall-clock time.
    pub throughput: f64,
    /// Completed plus timed-out queries per minute.
    pub processed_per_minute: f64,
    pub total_nrs: usize,
    pub total_ntb: u64,
    pub mean_nrs: f64,
    pub mean_ntb: f64,
    pub mean_qet_ms: f64,
    pub mean_qrt_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub config: WorkloadConfig,
    /// How NTB is counted.
    pub ntb_definition: String,
    pub per_query: Vec<QueryMetrics>,
    pub aggregates: Aggregates,
}

pub const NTB_DEFINITION: &str =
    "request and response bodies in bytes; GET query strings count as request bodies; headers excluded";

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (n, sum) = it.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Sums and means over completed queries; counts over all.
pub fn aggregate(per_query: &[QueryMetrics], wall: Duration) -> Aggregates {
    let done: Vec<&QueryMetrics> = per_query
        .iter()
        .filter(|m| !m.timed_out && m.error.is_none())
        .collect();
    let timed_out = per_query.iter().filter(|m| m.timed_out).count();
    let minutes = wall.as_secs_f64() / 60.0;
    let per_minute = |n: usize| if minutes > 0.0 { n as f64 / minutes } else { 0.0 };
    Aggregates {
        queries: per_query.len(),
        completed: done.len(),
        timed_out,
        failed: per_query.len() - done.len() - timed_out,
        wall_seconds: wall.as_secs_f64(),
        throughput: per_minute(done.len()),
        processed_per_minute: per_minute(done.len() + timed_out),
        total_nrs: per_query.iter().map(|m| m.nrs).sum(),
        total_ntb: per_query.iter().map(|m| m.ntb).sum(),
        mean_nrs: mean(done.iter().map(|m| m.nrs as f64)),
        mean_ntb: mean(done.iter().map(|m| m.ntb as f64)),
        mean_qet_ms: mean(done.iter().map(|m| m.qet_ms)),
        mean_qrt_ms: mean(done.iter().map(|m| m.qrt_ms)),
    }
}

/// Runs `cfg.clients` workers, each executing `queries` (cycled to
/// `cfg.queries_per_client`) one at a time against its own source.
pub fn run_workload<S, F>(
    cfg: &WorkloadConfig,
    queries: &[(String, BgpQuery)],
    make_source: F,
) -> anyhow::Result<MetricsReport>
where
    S: TimedSource,
    F: Fn(usize) -> S + Sync,
{
    let mode: Mode = cfg.mode.parse().map_err(anyhow::Error::msg)?;
    anyhow::ensure!(cfg.clients >= 1, "at least one client");
    anyhow::ensure!(cfg.queries_per_client >= 1, "at least one query per client");
    anyhow::ensure!(!queries.is_empty(), "empty query list");
    let timeout = Duration::from_secs(cfg.timeout_secs);
    let began = Instant::now();
    let mut per_query: Vec<QueryMetrics> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..cfg.clients)
            .map(|client| {
                let make_source = &make_source;
                scope.spawn(move || {
                    let mut source = make_source(client);
                    (0..cfg.queries_per_client)
                        .map(|seq| {
                            let (name, q) = &queries[seq % queries.len()];
                            let run = run_query(&mut source, q, mode, timeout, ClientConfig::default());
                            QueryMetrics {
                                client,
                                seq,
                                query: name.clone(),
                                nrs: run.log.nrs(),
                                ntb: run.log.ntb(),
                                qet_ms: ms(run.qet),
                                qrt_ms: ms(run.qrt),
                                results: run.rows.len(),
                                timed_out: run.timed_out,
                                error: run.error,
                            }
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("worker panicked"))
            .collect()
    });
    let wall = began.elapsed();
    per_query.sort_by_key(|m| (m.client, m.seq));
    Ok(MetricsReport {
        config: cfg.clone(),
        ntb_definition: NTB_DEFINITION.into(),
        aggregates: aggregate(&per_query, wall),
        per_query,
    })
}

/// Runs a workload over HTTP, checking first that the server answers.
pub fn run_http_workload(
    cfg: &WorkloadConfig,
    queries: &[(String, BgpQuery)],
) -> anyhow::Result<MetricsReport> {
    HttpSource::new(&cfg.server)
        .meta()
        .map_err(|e| anyhow::anyhow!("server {} unreachable: {e}", cfg.server))?;
    run_workload(cfg, queries, |_| HttpSource::new(&cfg.server))
}

impl MetricsReport {
    /// One header row and one row of aggregates.
    pub fn summary_tsv(&self) -> String {
        let a = &self.aggregates;
        let mut out = String::from(
            "mode\tload\tclients\tqueries\tcompleted\ttimed_out\tfailed\tthroughput_qpm\tprocessed_qpm\tmean_nrs\tmean_ntb\tmean_qet_ms\tmean_qrt_ms\n",
        );
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.1}\t{:.3}\t{:.3}",
            self.config.mode,
            self.config.load,
            self.config.clients,
            a.queries,
            a.completed,
            a.timed_out,
            a.failed,
            a.throughput,
            a.processed_per_minute,
            a.mean_nrs,
            a.mean_ntb,
            a.mean_qet_ms,
            a.mean_qrt_ms
        );
        out
    }

    /// Aligned table for terminals.
    pub fn table(&self) -> String {
        let a = &self.aggregates;
        let rows = [
            ("mode", self.config.mode.clone()),
            ("load", self.config.load.clone()),
            ("clients", self.config.clients.to_string()),
            ("queries", a.queries.to_string()),
            ("completed", a.completed.to_string()),
            ("timed out", a.timed_out.to_string()),
            ("failed", a.failed.to_string()),
            ("throughput (q/min)", format!("{:.2}", a.throughput)),
            ("mean NRS", format!("{:.2}", a.mean_nrs)),
            ("mean NTB (bytes)", format!("{:.1}", a.mean_ntb)),
            ("mean QET (ms)", format!("{:.3}", a.mean_qet_ms)),
            ("mean QRT (ms)", format!("{:.3}", a.mean_qrt_ms)),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<20} {v:>14}");
        }
        out
    }
}
