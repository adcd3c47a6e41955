//! JSON encoding of fragment requests and pages.
//!
//! Terms travel as tagged strings: `<iri>`, `"literal"` (full token),
//! `_:blank`, `?var`. Mapping keys are bare variable names.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use spf_core::fragment::SelectorError;
use spf_core::{
    Control, FragmentPage, FragmentRequest, PageMetadata, SelectorKind, SelectorSpec,
    SolutionMapping, StarPattern, Term, Triple, TripleGroup, TriplePattern,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> WireError {
    WireError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetadataDoc {
    pub cnt: usize,
    pub page: usize,
    pub page_size: usize,
    pub has_next: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormDoc {
    pub kind: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ControlsDoc {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fragment_template: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub form: Option<FormDoc>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub next_page: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDoc {
    pub mapping: BTreeMap<String, String>,
    pub triples: Vec<[String; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PageDoc {
    pub page_uri: String,
    pub fragment_uri: String,
    pub metadata: MetadataDoc,
    pub controls: ControlsDoc,
    pub groups: Vec<GroupDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorDoc {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pattern: Option<[String; 3]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub patterns: Option<Vec<[String; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bindings: Option<Vec<BTreeMap<String, String>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestDoc {
    pub selector: SelectorDoc,
    #[serde(default = "first_page")]
    pub page: usize,
}

fn first_page() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetaDoc {
    pub triple_count: usize,
    pub page_size: usize,
    pub max_omega: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub limit: Option<String>,
}

/// How a request goes over HTTP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireRequest {
    /// Query string (without `?`) for `GET …/fragment`.
    Get(String),
    /// JSON body for `POST …/fragment`.
    Post(Vec<u8>),
}

impl WireRequest {
    /// Bytes charged to the request side of NTB.
    pub fn payload_len(&self) -> u64 {
        match self {
            WireRequest::Get(q) => q.len() as u64,
            WireRequest::Post(b) => b.len() as u64,
        }
    }
}

fn pattern_doc(tp: &TriplePattern) -> [String; 3] {
    tp.terms().map(|t| t.to_string())
}

fn mapping_doc(mu: &SolutionMapping) -> BTreeMap<String, String> {
    mu.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn selector_doc(selector: &SelectorSpec) -> SelectorDoc {
    let bindings = || Some(selector.omega().iter().map(mapping_doc).collect());
    match selector {
        SelectorSpec::Tp(tp) => SelectorDoc {
            kind: "tp".into(),
            pattern: Some(pattern_doc(tp)),
            patterns: None,
            bindings: None,
        },
        SelectorSpec::Brtp(tp, _) => SelectorDoc {
            kind: "tp".into(),
            pattern: Some(pattern_doc(tp)),
            patterns: None,
            bindings: bindings(),
        },
        SelectorSpec::Star(sp, _) => SelectorDoc {
            kind: "star".into(),
            pattern: None,
            patterns: Some(sp.patterns().iter().map(pattern_doc).collect()),
            bindings: bindings(),
        },
    }
}

/// Canonical TPF query string for a single pattern, without the page.
pub fn tpf_query(tp: &TriplePattern) -> String {
    let mut q = form_urlencoded::Serializer::new(String::new());
    for (key, term) in ["s", "p", "o"].into_iter().zip(tp.terms()) {
        q.append_pair(key, &term.to_string());
    }
    q.finish()
}

pub fn encode_request(request: &FragmentRequest) -> WireRequest {
    match &request.selector {
        SelectorSpec::Tp(tp) => {
            WireRequest::Get(format!("{}&page={}", tpf_query(tp), request.page))
        }
        selector => {
            let doc = RequestDoc {
                selector: selector_doc(selector),
                page: request.page,
            };
            WireRequest::Post(serde_json::to_vec(&doc).expect("request documents serialize"))
        }
    }
}

fn decode_term(s: &str) -> Result<Term, WireError> {
    Term::parse_tagged(s).map_err(|e| invalid(format!("term {s:?}: {e}")))
}

fn decode_pattern(doc: &[String; 3]) -> Result<TriplePattern, WireError> {
    TriplePattern::new(
        decode_term(&doc[0])?,
        decode_term(&doc[1])?,
        decode_term(&doc[2])?,
    )
    .map_err(|e| invalid(e.to_string()))
}

fn decode_mapping(doc: &BTreeMap<String, String>) -> Result<SolutionMapping, WireError> {
    let mut mu = SolutionMapping::new();
    for (var, value) in doc {
        let name = Term::var(var).map_err(|e| invalid(e.to_string()))?;
        let name = name.var_name().expect("variable term").clone();
        mu.bind(name, decode_term(value)?)
            .map_err(|e| invalid(format!("binding of {var}: {e}")))?;
    }
    Ok(mu)
}

/// Selector named by a POST body. Fails on missing, conflicting or
/// malformed fields.
pub fn decode_selector(doc: &SelectorDoc) -> Result<SelectorSpec, WireError> {
    let omega = doc
        .bindings
        .iter()
        .flatten()
        .map(decode_mapping)
        .collect::<Result<Vec<_>, _>>()?;
    match (doc.kind.as_str(), &doc.pattern, &doc.patterns) {
        ("tp", Some(p), None) => {
            let tp = decode_pattern(p)?;
            Ok(if omega.is_empty() {
                SelectorSpec::Tp(tp)
            } else {
                SelectorSpec::Brtp(tp, omega)
            })
        }
        ("star", None, Some(ps)) => {
            let patterns = ps.iter().map(decode_pattern).collect::<Result<Vec<_>, _>>()?;
            let sp = StarPattern::new(patterns).map_err(|e| invalid(e.to_string()))?;
            Ok(SelectorSpec::Star(sp, omega))
        }
        ("tp" | "star", Some(_), Some(_)) => {
            Err(invalid("selector carries both pattern and patterns"))
        }
        ("tp", None, _) => Err(invalid("tp selector needs a pattern")),
        ("star", _, None) => Err(invalid("star selector needs patterns")),
        (other, ..) => Err(invalid(format!("unknown selector type {other:?}"))),
    }
}

pub fn decode_request_body(body: &[u8]) -> Result<(SelectorSpec, usize), WireError> {
    let doc: RequestDoc = serde_json::from_slice(body)?;
    if doc.page == 0 {
        return Err(invalid("page must be at least 1"));
    }
    Ok((decode_selector(&doc.selector)?, doc.page))
}

/// Parses `s=&p=&o=&page=`. Missing or empty positions become the
/// variables `?s`, `?p` and `?o`.
pub fn decode_tpf_query(query: &str) -> Result<(SelectorSpec, usize), WireError> {
    let mut slots: [Option<String>; 4] = Default::default();
    for (key, value) in form_urlencoded::parse(query.as_bytes()) {
        let i = match key.as_ref() {
            "s" => 0,
            "p" => 1,
            "o" => 2,
            "page" => 3,
            other => return Err(invalid(format!("unknown parameter {other:?}"))),
        };
        if slots[i].replace(value.into_owned()).is_some() {
            return Err(invalid(format!("duplicate parameter {key:?}")));
        }
    }
    let mut terms = Vec::with_capacity(3);
    for (slot, default) in slots[..3].iter().zip(["s", "p", "o"]) {
        terms.push(match slot.as_deref() {
            None | Some("") => Term::var(default).expect("valid name"),
            Some(s) => decode_term(s)?,
        });
    }
    let o = terms.pop().expect("three terms");
    let p = terms.pop().expect("three terms");
    let s = terms.pop().expect("three terms");
    let tp = TriplePattern::new(s, p, o).map_err(|e| invalid(e.to_string()))?;
    let page = match slots[3].as_deref() {
        None | Some("") => 1,
        Some(n) => n
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| invalid(format!("page must be a positive integer, got {n:?}")))?,
    };
    Ok((SelectorSpec::Tp(tp), page))
}

pub fn page_doc(page: &FragmentPage) -> PageDoc {
    let mut controls = ControlsDoc {
        fragment_template: None,
        form: None,
        next_page: None,
    };
    for c in &page.controls {
        match c {
            Control::Collection { template } => controls.fragment_template = Some(template.clone()),
            Control::Form { kind, target } => {
                controls.form = Some(FormDoc {
                    kind: kind.as_str().into(),
                    target: target.clone(),
                })
            }
            Control::NextPage { page } => controls.next_page = Some(*page),
        }
    }
    PageDoc {
        page_uri: page.page_uri.clone(),
        fragment_uri: page.fragment_uri.clone(),
        metadata: MetadataDoc {
            cnt: page.metadata.cnt,
            page: page.metadata.page,
            page_size: page.metadata.page_size,
            has_next: page.metadata.has_next,
        },
        controls,
        groups: page
            .groups
            .iter()
            .map(|g| GroupDoc {
                mapping: mapping_doc(&g.mapping),
                triples: g
                    .triples
                    .iter()
                    .map(|t| [t.subject.to_string(), t.predicate.to_string(), t.object.to_string()])
                    .collect(),
            })
            .collect(),
    }
}

/// Response body for `page` and its length in bytes.
pub fn serialize_page(page: &FragmentPage) -> (Vec<u8>, usize) {
    let body = serde_json::to_vec(&page_doc(page)).expect("page documents serialize");
    let len = body.len();
    (body, len)
}

fn selector_kind(s: &str) -> Result<SelectorKind, WireError> {
    match s {
        "tp" => Ok(SelectorKind::Tp),
        "brtp" => Ok(SelectorKind::Brtp),
        "star" => Ok(SelectorKind::Star),
        other => Err(invalid(format!("unknown form kind {other:?}"))),
    }
}

/// Inverse of [`serialize_page`]. The selector is not part of the body;
/// the caller supplies the one it asked for.
pub fn decode_page(body: &[u8], selector: SelectorSpec) -> Result<FragmentPage, WireError> {
    let doc: PageDoc = serde_json::from_slice(body)?;
    let mut controls = Vec::new();
    if let Some(template) = doc.controls.fragment_template {
        controls.push(Control::Collection { template });
    }
    if let Some(form) = doc.controls.form {
        controls.push(Control::Form {
            kind: selector_kind(&form.kind)?,
            target: form.target,
        });
    }
    if let Some(page) = doc.controls.next_page {
        controls.push(Control::NextPage { page });
    }
    let mut groups = Vec::with_capacity(doc.groups.len());
    for g in &doc.groups {
        let mut triples = Vec::with_capacity(g.triples.len());
        for [s, p, o] in &g.triples {
            let t = Triple::new(decode_term(s)?, decode_term(p)?, decode_term(o)?)
                .map_err(|e| invalid(e.to_string()))?;
            triples.push(t);
        }
        groups.push(TripleGroup {
            mapping: decode_mapping(&g.mapping)?,
            triples,
        });
    }
    Ok(FragmentPage {
        page_uri: doc.page_uri,
        fragment_uri: doc.fragment_uri,
        selector,
        groups,
        metadata: PageMetadata {
            cnt: doc.metadata.cnt,
            page: doc.metadata.page,
            page_size: doc.metadata.page_size,
            has_next: doc.metadata.has_next,
        },
        controls,
    })
}

/// The limit a selector error refers to, for 422 responses.
pub fn limit_name(e: &SelectorError) -> Option<&'static str> {
    match e {
        SelectorError::OmegaTooLarge { .. } => Some("maxOmega"),
        SelectorError::StarTooLarge { .. } => Some("maxStarSize"),
        SelectorError::DuplicateBinding(_) => None,
    }
}
