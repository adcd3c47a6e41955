//! Fragment sources for the client: HTTP, and in-process through the same
//! codec.

use std::sync::Arc;
use std::time::{Duration, Instant};

use spf_core::{Fetched, FragmentRequest, FragmentSource, SourceError};

use crate::server::{FragmentServer, RawRequest};
use crate::wire::{self, ErrorDoc, WireRequest};

/// One request/response pair as it went over the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exchange {
    pub request: WireRequest,
    pub status: u16,
    pub body: Vec<u8>,
}

/// Clock, deadline and optional capture shared by both sources.
#[derive(Debug)]
struct Bookkeeping {
    epoch: Instant,
    deadline: Option<Instant>,
    capture: Option<Vec<Exchange>>,
}

impl Bookkeeping {
    fn new() -> Self {
        Bookkeeping {
            epoch: Instant::now(),
            deadline: None,
            capture: None,
        }
    }

    fn micros(&self, t: Instant) -> u64 {
        t.duration_since(self.epoch).as_micros() as u64
    }

    fn remaining(&self) -> Result<Option<Duration>, SourceError> {
        match self.deadline {
            None => Ok(None),
            Some(d) => match d.checked_duration_since(Instant::now()) {
                Some(left) if !left.is_zero() => Ok(Some(left)),
                _ => Err(SourceError::Timeout),
            },
        }
    }

    fn finish(
        &mut self,
        request: &FragmentRequest,
        wire_request: WireRequest,
        status: u16,
        body: Vec<u8>,
        started: Instant,
    ) -> Result<Fetched, SourceError> {
        let finished = Instant::now();
        let request_bytes = wire_request.payload_len();
        let response_bytes = body.len() as u64;
        let outcome = if status == 200 {
            wire::decode_page(&body, request.selector.clone())
                .map_err(|e| SourceError::Protocol(e.to_string()))
        } else {
            let message = serde_json::from_slice::<ErrorDoc>(&body)
                .map(|d| d.error)
                .unwrap_or_else(|_| String::from_utf8_lossy(&body).into_owned());
            Err(match status {
                400 | 404 | 422 => SourceError::Rejected(format!("{status}: {message}")),
                _ => SourceError::Transport(format!("{status}: {message}")),
            })
        };
        if let Some(capture) = &mut self.capture {
            capture.push(Exchange {
                request: wire_request,
                status,
                body,
            });
        }
        let page = outcome?;
        if let Some(d) = self.deadline {
            if finished > d {
                return Err(SourceError::Timeout);
            }
        }
        Ok(Fetched {
            page,
            request_bytes,
            response_bytes,
            started_us: self.micros(started),
            finished_us: self.micros(finished),
        })
    }
}

/// Talks to a server over HTTP. Triple-pattern selectors go out as GET
/// query strings, everything else as POST bodies.
pub struct HttpSource {
    agent: ureq::Agent,
    dataset_url: String,
    books: Bookkeeping,
}

impl HttpSource {
    /// `dataset_url` is the dataset prefix, e.g. `http://127.0.0.1:5000/g0`.
    pub fn new(dataset_url: &str) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .max_idle_connections_per_host(4)
            .build()
            .into();
        Self::with_agent(agent, dataset_url)
    }

    pub fn with_agent(agent: ureq::Agent, dataset_url: &str) -> Self {
        HttpSource {
            agent,
            dataset_url: dataset_url.trim_end_matches('/').into(),
            books: Bookkeeping::new(),
        }
    }

    /// Fails every request issued after `deadline` with a timeout.
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.books.deadline = deadline;
    }

    /// Start keeping every exchange (see [`HttpSource::take_capture`]).
    pub fn capture(&mut self) {
        self.books.capture.get_or_insert_with(Vec::new);
    }

    pub fn take_capture(&mut self) -> Vec<Exchange> {
        self.books.capture.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Microseconds since this source was created, on the clock used for
    /// request timestamps.
    pub fn now_us(&self) -> u64 {
        self.books.micros(Instant::now())
    }

    /// `GET {dataset}/meta`.
    pub fn meta(&self) -> Result<wire::MetaDoc, SourceError> {
        let url = format!("{}/meta", self.dataset_url);
        let mut resp = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| SourceError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_vec()
            .map_err(|e| SourceError::Transport(e.to_string()))?;
        if status != 200 {
            return Err(SourceError::Rejected(format!(
                "{status}: {}",
                String::from_utf8_lossy(&body)
            )));
        }
        serde_json::from_slice(&body).map_err(|e| SourceError::Protocol(e.to_string()))
    }
}

fn transport(e: ureq::Error) -> SourceError {
    match e {
        ureq::Error::Timeout(_) => SourceError::Timeout,
        other => SourceError::Transport(other.to_string()),
    }
}

impl FragmentSource for HttpSource {
    fn fetch(&mut self, request: &FragmentRequest) -> Result<Fetched, SourceError> {
        let timeout = self.books.remaining()?;
        let wire_request = wire::encode_request(request);
        let started = Instant::now();
        let result = match &wire_request {
            WireRequest::Get(query) => self
                .agent
                .get(format!("{}/fragment?{}", self.dataset_url, query))
                .config()
                .timeout_global(timeout)
                .build()
                .call(),
            WireRequest::Post(body) => self
                .agent
                .post(format!("{}/fragment", self.dataset_url))
                .header("content-type", "application/json")
                .config()
                .timeout_global(timeout)
                .build()
                .send(&body[..]),
        };
        let mut resp = result.map_err(transport)?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(u64::MAX)
            .read_to_vec()
            .map_err(transport)?;
        self.books.finish(request, wire_request, status, body, started)
    }
}

/// Calls a [`FragmentServer`] directly, encoding and decoding every
/// request and page exactly as the HTTP path does.
pub struct LocalSource {
    server: Arc<FragmentServer>,
    dataset: String,
    books: Bookkeeping,
}

impl LocalSource {
    pub fn new(server: Arc<FragmentServer>, dataset: &str) -> Self {
        LocalSource {
            server,
            dataset: dataset.into(),
            books: Bookkeeping::new(),
        }
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.books.deadline = deadline;
    }

    pub fn capture(&mut self) {
        self.books.capture.get_or_insert_with(Vec::new);
    }

    pub fn take_capture(&mut self) -> Vec<Exchange> {
        self.books.capture.as_mut().map(std::mem::take).unwrap_or_default()
    }
}

impl FragmentSource for LocalSource {
    fn fetch(&mut self, request: &FragmentRequest) -> Result<Fetched, SourceError> {
        self.books.remaining()?;
        let wire_request = wire::encode_request(request);
        let started = Instant::now();
        let raw = match &wire_request {
            WireRequest::Get(q) => RawRequest::Get(q),
            WireRequest::Post(b) => RawRequest::Post(b),
        };
        let resp = self.server.handle_raw(&self.dataset, raw);
        self.books
            .finish(request, wire_request, resp.status, resp.body, started)
    }
}
