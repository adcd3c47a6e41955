//! The fragment server: request dispatch, selection, paging and the HTTP
//! front end.

use std::collections::BTreeMap;
use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use sha2::{Digest, Sha256};
use spf_core::{
    make_fragment, paginate, FragmentPage, Graph, SelectorSpec, DEFAULT_PAGE_SIZE, MAX_OMEGA,
};
use thiserror::Error;
use tokio::sync::oneshot;

use crate::wire::{self, ErrorDoc, MetaDoc};

pub const DEFAULT_MAX_STAR: usize = 16;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Dataset name → N-Triples file.
    pub datasets: Vec<(String, PathBuf)>,
    pub page_size: usize,
    pub max_omega: usize,
    pub max_star: usize,
    pub bind: SocketAddr,
    /// Prefix of the URIs written into pages; defaults to `http://{bind}`.
    pub public_base: Option<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            datasets: Vec::new(),
            page_size: DEFAULT_PAGE_SIZE,
            max_omega: MAX_OMEGA,
            max_star: DEFAULT_MAX_STAR,
            bind: SocketAddr::from(([127, 0, 0, 1], 5000)),
            public_base: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServerError {
    #[error("unknown dataset {0:?}")]
    NotFound(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("request rejected: {message}")]
    Rejected { limit: &'static str, message: String },
}

impl ServerError {
    pub fn status(&self) -> u16 {
        match self {
            ServerError::NotFound(_) => 404,
            ServerError::BadRequest(_) => 400,
            ServerError::Rejected { .. } => 422,
        }
    }

    fn body(&self) -> Vec<u8> {
        let doc = ErrorDoc {
            error: self.to_string(),
            limit: match self {
                ServerError::Rejected { limit, .. } => Some((*limit).into()),
                _ => None,
            },
        };
        serde_json::to_vec(&doc).expect("error documents serialize")
    }
}

/// An undecoded fragment request as it arrived.
#[derive(Debug, Clone, Copy)]
pub enum RawRequest<'a> {
    Get(&'a str),
    Post(&'a [u8]),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Reads the selector and page out of a raw request: query parameters
/// give a TPF selector, a JSON body a brTPF or star selector.
pub fn dispatch_selector(raw: RawRequest<'_>) -> Result<(SelectorSpec, usize), ServerError> {
    let decoded = match raw {
        RawRequest::Get(query) => wire::decode_tpf_query(query),
        RawRequest::Post(body) => wire::decode_request_body(body),
    };
    decoded.map_err(|e| ServerError::BadRequest(e.to_string()))
}

/// Loaded datasets plus the paging and guard limits. Holds no per-request
/// state; every handler only reads it.
pub struct FragmentServer {
    datasets: BTreeMap<String, Arc<Graph>>,
    page_size: usize,
    max_omega: usize,
    max_star: usize,
    base: String,
}

impl FragmentServer {
    pub fn new(page_size: usize, max_omega: usize, max_star: usize) -> Self {
        assert!(page_size >= 1 && max_omega >= 1 && max_star >= 1);
        FragmentServer {
            datasets: BTreeMap::new(),
            page_size,
            max_omega,
            max_star,
            base: "http://localhost".into(),
        }
    }

    pub fn with_defaults() -> Self {
        Self::new(DEFAULT_PAGE_SIZE, MAX_OMEGA, DEFAULT_MAX_STAR)
    }

    pub fn add_dataset(&mut self, name: &str, graph: Arc<Graph>) {
        self.datasets.insert(name.into(), graph);
    }

    pub fn set_base(&mut self, base: &str) {
        self.base = base.trim_end_matches('/').into();
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn max_omega(&self) -> usize {
        self.max_omega
    }

    fn graph(&self, dataset: &str) -> Result<&Graph, ServerError> {
        self.datasets
            .get(dataset)
            .map(|g| &**g)
            .ok_or_else(|| ServerError::NotFound(dataset.into()))
    }

    /// URI identifying the whole fragment of `selector`: the TPF query for
    /// triple patterns, a digest of the canonical selector otherwise.
    pub fn fragment_uri(&self, dataset: &str, selector: &SelectorSpec) -> String {
        let query = match selector {
            SelectorSpec::Tp(tp) => wire::tpf_query(tp),
            other => {
                let canonical = serde_json::to_vec(&wire::selector_doc(other))
                    .expect("selector documents serialize");
                let digest = Sha256::digest(&canonical);
                let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
                format!("selector={hex}")
            }
        };
        format!("{}/{}/fragment?{}", self.base, dataset, query)
    }

    pub fn handle_fragment_request(
        &self,
        dataset: &str,
        selector: SelectorSpec,
        page: usize,
    ) -> Result<FragmentPage, ServerError> {
        let graph = self.graph(dataset)?;
        if page == 0 {
            return Err(ServerError::BadRequest("page must be at least 1".into()));
        }
        selector
            .validate(self.max_omega, self.max_star)
            .map_err(|e| match wire::limit_name(&e) {
                Some(limit) => ServerError::Rejected {
                    limit,
                    message: e.to_string(),
                },
                None => ServerError::BadRequest(e.to_string()),
            })?;
        let uri = self.fragment_uri(dataset, &selector);
        let fragment = make_fragment(&uri, selector, graph);
        Ok(paginate(&fragment, page, self.page_size))
    }

    /// Full request path shared by the HTTP front end and in-process
    /// sources: decode, select, page, encode.
    pub fn handle_raw(&self, dataset: &str, raw: RawRequest<'_>) -> RawResponse {
        let result = self.graph(dataset).and_then(|_| {
            let (selector, page) = dispatch_selector(raw)?;
            self.handle_fragment_request(dataset, selector, page)
        });
        match result {
            Ok(page) => RawResponse {
                status: 200,
                body: wire::serialize_page(&page).0,
            },
            Err(e) => RawResponse {
                status: e.status(),
                body: e.body(),
            },
        }
    }

    pub fn meta(&self, dataset: &str) -> Result<MetaDoc, ServerError> {
        Ok(MetaDoc {
            triple_count: self.graph(dataset)?.len(),
            page_size: self.page_size,
            max_omega: self.max_omega,
        })
    }
}

fn json_response(status: u16, body: Vec<u8>) -> Response {
    let status = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn run_raw(server: Arc<FragmentServer>, dataset: String, raw: Raw) -> Response {
    let handled = tokio::task::spawn_blocking(move || {
        let request = match &raw {
            Raw::Get(q) => RawRequest::Get(q),
            Raw::Post(b) => RawRequest::Post(b),
        };
        server.handle_raw(&dataset, request)
    })
    .await;
    match handled {
        Ok(r) => json_response(r.status, r.body),
        Err(e) => json_response(500, format!("{{\"error\":{:?}}}", e.to_string()).into_bytes()),
    }
}

enum Raw {
    Get(String),
    Post(Bytes),
}

async fn get_fragment(
    State(server): State<Arc<FragmentServer>>,
    Path(dataset): Path<String>,
    RawQuery(query): RawQuery,
) -> Response {
    run_raw(server, dataset, Raw::Get(query.unwrap_or_default())).await
}

async fn post_fragment(
    State(server): State<Arc<FragmentServer>>,
    Path(dataset): Path<String>,
    body: Bytes,
) -> Response {
    run_raw(server, dataset, Raw::Post(body)).await
}

async fn get_meta(State(server): State<Arc<FragmentServer>>, Path(dataset): Path<String>) -> Response {
    match server.meta(&dataset) {
        Ok(meta) => json_response(200, serde_json::to_vec(&meta).expect("meta serializes")),
        Err(e) => json_response(e.status(), e.body()),
    }
}

pub fn router(server: Arc<FragmentServer>) -> Router {
    Router::new()
        .route("/{dataset}/fragment", get(get_fragment).post(post_fragment))
        .route("/{dataset}/meta", get(get_meta))
        .with_state(server)
}

/// A server running on its own runtime thread; stops when dropped.
pub struct ServerHandle {
    addr: SocketAddr,
    base: String,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    /// Prefix for the fragment and meta endpoints of `dataset`.
    pub fn dataset_url(&self, dataset: &str) -> String {
        format!("{}/{}", self.base, dataset)
    }

    /// Blocks until the server stops on its own (it normally does not).
    pub fn wait(mut self) -> std::io::Result<()> {
        self.shutdown.take();
        match self.thread.take().map(JoinHandle::join) {
            Some(Ok(r)) => r,
            Some(Err(_)) => Err(std::io::Error::other("server thread panicked")),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
            if let Some(t) = self.thread.take() {
                let _ = t.join();
            }
        }
    }
}

/// Binds `addr` (port 0 picks a free port) and serves `server` from a
/// background thread. Page URIs use `public_base`, or the bound address.
pub fn spawn(
    mut server: FragmentServer,
    addr: SocketAddr,
    public_base: Option<&str>,
) -> std::io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let base = public_base
        .map(|b| b.trim_end_matches('/').to_string())
        .unwrap_or_else(|| format!("http://{addr}"));
    server.set_base(&base);
    let app = router(Arc::new(server));
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("spf-server".into())
        .spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                axum::serve(listener, app)
                    .with_graceful_shutdown(async move {
                        // A dropped sender (from `wait`) means run forever.
                        if rx.await.is_err() {
                            std::future::pending::<()>().await;
                        }
                    })
                    .await
            })
        })?;
    Ok(ServerHandle {
        addr,
        base,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Loads every configured dataset and starts serving.
pub fn start(config: &ServerConfig) -> anyhow::Result<ServerHandle> {
    anyhow::ensure!(config.page_size >= 1, "page size must be at least 1");
    anyhow::ensure!(config.max_omega >= 1, "maxOmega must be at least 1");
    anyhow::ensure!(config.max_star >= 1, "maxStarSize must be at least 1");
    anyhow::ensure!(!config.datasets.is_empty(), "no dataset configured");
    let mut server = FragmentServer::new(config.page_size, config.max_omega, config.max_star);
    for (name, path) in &config.datasets {
        let graph = crate::load_graph(path)?;
        server.add_dataset(name, Arc::new(graph));
    }
    Ok(spawn(server, config.bind, config.public_base.as_deref())?)
}
