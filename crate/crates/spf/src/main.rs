use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use spf_core::oracle::answer;
use spf_core::{serialize_ntriples, BgpQuery, ClientConfig, Mode, SolutionMapping};

use spf::datagen::generate_dataset;
use spf::querygen::{generate_queries, Load};
use spf::server::{self, ServerConfig, DEFAULT_MAX_STAR};
use spf::workload::{run_http_workload, run_query, WorkloadConfig};
use spf::{load_graph, load_query, HttpSource};

#[derive(Parser)]
#[command(name = "spf", version, about = "Star pattern fragments: server, client and benchmark tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Serve N-Triples datasets over HTTP.
    Serve {
        /// Dataset as NAME=FILE, or FILE (named after the file stem). Repeatable.
        #[arg(long = "data", env = "SPF_DATA", required = true, value_delimiter = ',')]
        data: Vec<String>,
        #[arg(long, env = "SPF_BIND", default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long, env = "SPF_PORT", default_value_t = 5000)]
        port: u16,
        #[arg(long, env = "SPF_PAGE_SIZE", default_value_t = spf_core::DEFAULT_PAGE_SIZE)]
        page_size: usize,
        #[arg(long, env = "SPF_MAX_OMEGA", default_value_t = spf_core::MAX_OMEGA)]
        max_omega: usize,
        #[arg(long, env = "SPF_MAX_STAR", default_value_t = DEFAULT_MAX_STAR)]
        max_star: usize,
        /// URI prefix written into pages (default: http://BIND:PORT).
        #[arg(long)]
        public_base: Option<String>,
    },
    /// Run one query against a server.
    Query {
        /// Dataset URL, e.g. http://127.0.0.1:5000/data
        #[arg(long)]
        server: String,
        #[arg(long, default_value = "spf")]
        mode: Mode,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
        /// Print NRS, NTB, QET and QRT to standard error.
        #[arg(long)]
        stats: bool,
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        #[arg(long, default_value_t = spf_core::MAX_OMEGA)]
        max_omega: usize,
    },
    /// Generate a synthetic N-Triples dataset.
    GenData {
        #[arg(long)]
        entities: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a query load over a dataset.
    GenQueries {
        #[arg(long)]
        data: PathBuf,
        /// 1-star, 2-stars, 3-stars, paths or union.
        #[arg(long)]
        load: Load,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; one .rq file per query.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run concurrent clients and write a metrics report.
    Bench {
        #[arg(long)]
        server: String,
        #[arg(long)]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        clients: usize,
        /// Query files, or directories of .rq files.
        #[arg(long = "queries", required = true, num_args = 1..)]
        queries: Vec<PathBuf>,
        /// Queries each client runs, cycling through the list (default: the list length).
        #[arg(long)]
        per_client: Option<usize>,
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        /// Label recorded in the report.
        #[arg(long, default_value = "custom")]
        load: String,
        /// Seed recorded in the report.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON report path.
        #[arg(long)]
        report: PathBuf,
        /// TSV summary path (default: report path with .tsv).
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Evaluate a query locally with the brute-force evaluator.
    Oracle {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
    },
}

fn dataset_spec(s: &str) -> Result<(String, PathBuf)> {
    if let Some((name, path)) = s.split_once('=') {
        if name.is_empty() || name.contains('/') {
            bail!("invalid dataset name {name:?}");
        }
        return Ok((name.into(), path.into()));
    }
    let path = PathBuf::from(s);
    let name = path
        .file_stem()
        .and_then(|n| n.to_str())
        .with_context(|| format!("cannot name dataset {s:?}; use NAME=FILE"))?
        .to_string();
    Ok((name, path))
}

fn write_rows(q: &BgpQuery, rows: &[SolutionMapping], format: Format) -> Result<()> {
    let vars = q.result_vars();
    let mut out = std::io::BufWriter::new(std::io::stdout().lock());
    match format {
        Format::Tsv => {
            let header: Vec<String> = vars.iter().map(|v| format!("?{v}")).collect();
            writeln!(out, "{}", header.join("\t"))?;
            for row in rows {
                let cells: Vec<String> = vars
                    .iter()
                    .map(|v| row.get(v).map(|t| t.to_string()).unwrap_or_default())
                    .collect();
                writeln!(out, "{}", cells.join("\t"))?;
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
                        .collect()
                })
                .collect();
            let doc = serde_json::json!({
                "vars": vars.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "rows": rows,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn query_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "rq"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        bail!("no query files found");
    }
    Ok(files)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve {
            data,
            bind,
            port,
            page_size,
            max_omega,
            max_star,
            public_base,
        } => {
            let config = ServerConfig {
                datasets: data.iter().map(|d| dataset_spec(d)).collect::<Result<_>>()?,
                page_size,
                max_omega,
                max_star,
                bind: SocketAddr::new(bind, port),
                public_base,
            };
            let handle = server::start(&config)?;
            for (name, _) in &config.datasets {
                eprintln!("serving {}", handle.dataset_url(name));
            }
            handle.wait()?;
        }
        Command::Query {
            server,
            mode,
            query,
            format,
            stats,
            timeout,
            max_omega,
        } => {
            anyhow::ensure!(max_omega >= 1, "max omega must be at least 1");
            let q = load_query(&query)?;
            let mut source = HttpSource::new(&server);
            let run = run_query(
                &mut source,
                &q,
                mode,
                Duration::from_secs(timeout),
                ClientConfig { max_omega },
            );
            write_rows(&q, &run.rows, format)?;
            if stats {
                eprintln!(
                    "NRS={}\tNTB={}\tQET_ms={:.3}\tQRT_ms={:.3}\tresults={}\ttimed_out={}",
                    run.log.nrs(),
                    run.log.ntb(),
                    run.qet.as_secs_f64() * 1000.0,
                    run.qrt.as_secs_f64() * 1000.0,
                    run.rows.len(),
                    run.timed_out
                );
            }
            if run.timed_out {
                bail!("query timed out after {timeout} s");
            }
            if let Some(e) = run.error {
                bail!("query failed: {e}");
            }
        }
        Command::GenData {
            entities,
            seed,
            out,
        } => {
            anyhow::ensure!(entities >= 1, "entities must be at least 1");
            let triples = generate_dataset(entities, seed);
            write_file(&out, serialize_ntriples(&triples).as_bytes())?;
            eprintln!("wrote {} triples to {}", triples.len(), out.display());
        }
        Command::GenQueries {
            data,
            load,
            count,
            seed,
            out,
        } => {
            let graph = load_graph(&data)?;
            let queries = generate_queries(load, count, &graph, seed)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (i, q) in queries.iter().enumerate() {
                let path = out.join(format!("{}-{:03}.rq", q.load, i + 1));
                write_file(&path, q.text.as_bytes())?;
            }
            eprintln!("wrote {} {load} queries to {}", queries.len(), out.display());
        }
        Command::Bench {
            server,
            mode,
            clients,
            queries,
            per_client,
            timeout,
            load,
            seed,
            report,
            tsv,
        } => {
            let files = query_files(&queries)?;
            let list: Vec<(String, BgpQuery)> = files
                .iter()
                .map(|f| {
                    let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    load_query(f).map(|q| (name, q))
                })
                .collect::<Result<_>>()?;
            let cfg = WorkloadConfig {
                mode: mode.as_str().into(),
                clients,
                queries_per_client: per_client.unwrap_or(list.len()),
                load,
                timeout_secs: timeout,
                server,
                seed,
            };
            let began = Instant::now();
            let metrics = run_http_workload(&cfg, &list)?;
            write_file(&report, &serde_json::to_vec_pretty(&metrics)?)?;
            let tsv = tsv.unwrap_or_else(|| report.with_extension("tsv"));
            write_file(&tsv, metrics.summary_tsv().as_bytes())?;
            print!("{}", metrics.table());
            eprintln!(
                "report {} and {} written in {:.1} s",
                report.display(),
                tsv.display(),
                began.elapsed().as_secs_f64()
            );
        }
        Command::Oracle {
            data,
            query,
            format,
        } => {
            let graph = load_graph(&data)?;
            let q = load_query(&query)?;
            let triples: Vec<_> = graph.triples().collect();
            write_rows(&q, &answer(&triples, &q), format)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

