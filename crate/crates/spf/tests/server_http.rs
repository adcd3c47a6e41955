#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use spf::server::RawRequest;
use spf::wire::{decode_page, encode_request, serialize_page, ErrorDoc, MetaDoc};
use spf::{FragmentServer, HttpSource, LocalSource};
use spf_core::{FragmentRequest, FragmentSource, SelectorSpec, StarPattern};
use support::*;

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

fn get(url: &str) -> (u16, Vec<u8>) {
    let mut r = agent().get(url).call().unwrap();
    (r.status().as_u16(), r.body_mut().read_to_vec().unwrap())
}

fn post(url: &str, body: &[u8]) -> (u16, Vec<u8>) {
    let mut r = agent()
        .post(url)
        .header("content-type", "application/json")
        .send(body)
        .unwrap();
    (r.status().as_u16(), r.body_mut().read_to_vec().unwrap())
}

fn error_doc(body: &[u8]) -> ErrorDoc {
    serde_json::from_slice(body).unwrap()
}

#[test]
fn meta_reports_the_dataset() {
    let h = serve(vec![("g0", g0())]);
    let (status, body) = get(&format!("{}/meta", h.dataset_url("g0")));
    assert_eq!(status, 200);
    let meta: MetaDoc = serde_json::from_slice(&body).unwrap();
    assert_eq!((meta.triple_count, meta.page_size, meta.max_omega), (9, 50, 30));
    assert_eq!(HttpSource::new(&h.dataset_url("g0")).meta().unwrap(), meta);
}

#[test]
fn errors_map_to_statuses() {
    let h = serve(vec![("g0", g0())]);
    let url = format!("{}/fragment", h.dataset_url("g0"));

    let (status, _) = get(&format!("{}/nope/fragment?p=%3Chttp%3A%2F%2Fex%2Faward%3E", h.base()));
    assert_eq!(status, 404);
    let (status, _) = post(&format!("{}/nope/fragment", h.base()), b"{}");
    assert_eq!(status, 404);
    let (status, _) = get(&format!("{}/nope/meta", h.base()));
    assert_eq!(status, 404);

    for bad_query in ["s=notaterm", "x=1", "page=0", "page=abc", "s=%3Fa&s=%3Fb"] {
        let (status, body) = get(&format!("{url}?{bad_query}"));
        assert_eq!(status, 400, "{bad_query}");
        assert!(error_doc(&body).limit.is_none());
    }
    for bad_body in [
        &b"not json"[..],
        br#"{"selector":{"type":"tp"},"page":1}"#,
        br#"{"selector":{"type":"cube","pattern":["?s","?p","?o"]},"page":1}"#,
        br#"{"selector":{"type":"tp","pattern":["?s","?p","?o"]},"page":0}"#,
        br#"{"selector":{"type":"star","patterns":[["?s","<http://ex/a>","?o"],["?t","<http://ex/b>","?o"]]}}"#,
        br#"{"selector":{"type":"tp","pattern":["?s","?p","?o"]},"extra":true}"#,
    ] {
        let (status, _) = post(&url, bad_body);
        assert_eq!(status, 400, "{}", String::from_utf8_lossy(bad_body));
    }

    // One binding over the limit.
    let bindings: Vec<_> = (0..31).map(|i| json!({ "s": format!("<http://ex/e{i}>") })).collect();
    let body = json!({
        "selector": { "type": "tp", "pattern": ["?s", "<http://ex/award>", "?o"], "bindings": bindings },
        "page": 1
    });
    let (status, body) = post(&url, body.to_string().as_bytes());
    assert_eq!(status, 422);
    assert_eq!(error_doc(&body).limit.as_deref(), Some("maxOmega"));

    let patterns: Vec<_> = (0..17).map(|i| json!(["?s", format!("<http://ex/p{i}>"), "?o"])).collect();
    let body = json!({ "selector": { "type": "star", "patterns": patterns }, "page": 1 });
    let (status, body) = post(&url, body.to_string().as_bytes());
    assert_eq!(status, 422);
    assert_eq!(error_doc(&body).limit.as_deref(), Some("maxStarSize"));

    // At the limit is fine.
    let bindings: Vec<_> = (0..30).map(|i| json!({ "s": format!("<http://ex/e{i}>") })).collect();
    let body = json!({
        "selector": { "type": "tp", "pattern": ["?s", "<http://ex/award>", "?o"], "bindings": bindings },
        "page": 1
    });
    assert_eq!(post(&url, body.to_string().as_bytes()).0, 200);
}

#[test]
fn tpf_defaults_and_controls() {
    let h = serve(vec![("g0", g0())]);
    let url = format!("{}/fragment", h.dataset_url("g0"));
    let (status, body) = get(&format!("{url}?p=%3Chttp%3A%2F%2Fex%2Fcountry%3E&o=%3Chttp%3A%2F%2Fex%2FNorway%3E"));
    assert_eq!(status, 200);
    let doc: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(doc["metadata"]["cnt"], 2);
    assert_eq!(doc["metadata"]["hasNext"], false);
    assert_eq!(doc["groups"].as_array().unwrap().len(), 2);
    assert!(doc["fragmentUri"].as_str().unwrap().starts_with(&url));

    let (_, body) = get(&url);
    let doc: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(doc["metadata"]["cnt"], 9);
}

fn random_requests(seed: u64, n: usize) -> (spf_core::Graph, Vec<FragmentRequest>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples = common::random_triples(&mut rng, 300);
    let graph = spf_core::build_graph(triples.clone()).unwrap();
    let requests = (0..n)
        .map(|i| {
            let star = common::random_star(&mut rng, &triples, 3);
            let omega = common::random_omega(&mut rng, &triples, &star, 6);
            let selector = if star.len() == 1 {
                let tp = star.patterns()[0].clone();
                if omega.is_empty() || i % 3 == 0 {
                    SelectorSpec::Tp(tp)
                } else {
                    SelectorSpec::Brtp(tp, omega)
                }
            } else {
                SelectorSpec::Star(star, omega)
            };
            FragmentRequest {
                selector,
                page: 1 + i % 2,
            }
        })
        .collect();
    (graph, requests)
}

#[test]
fn response_sizes_are_the_serialized_pages() {
    let (graph, requests) = random_requests(7, 60);
    let reference = {
        let mut s = FragmentServer::with_defaults();
        s.add_dataset("r", Arc::new(graph.clone()));
        s
    };
    let h = serve(vec![("r", graph)]);
    let mut src = HttpSource::new(&h.dataset_url("r"));
    src.capture();
    for req in &requests {
        let fetched = src.fetch(req).unwrap();
        let mut expected = reference.handle_fragment_request("r", req.selector.clone(), req.page).unwrap();
        // Page URIs carry the base the server was started with.
        let base = reference.base().to_string();
        expected.page_uri = expected.page_uri.replace(&base, h.base());
        expected.fragment_uri = expected.fragment_uri.replace(&base, h.base());
        for c in &mut expected.controls {
            match c {
                spf_core::Control::Collection { template } => *template = template.replace(&base, h.base()),
                spf_core::Control::Form { target, .. } => *target = target.replace(&base, h.base()),
                spf_core::Control::NextPage { .. } => {}
            }
        }
        let (body, len) = serialize_page(&expected);
        let exchange = src.take_capture().pop().unwrap();
        assert_eq!(exchange.status, 200);
        assert_eq!(exchange.body, body);
        assert_eq!(fetched.response_bytes, len as u64);
        assert_eq!(fetched.request_bytes, encode_request(req).payload_len());
        assert_eq!(fetched.page, expected);
    }
}

#[test]
fn interleaving_does_not_change_responses() {
    let (graph, requests) = random_requests(11, 80);
    let mut server = FragmentServer::with_defaults();
    server.add_dataset("r", Arc::new(graph.clone()));
    let server = Arc::new(server);
    // Each request answered by a fresh server with no history.
    let isolated: Vec<_> = requests
        .iter()
        .map(|r| {
            let mut fresh = FragmentServer::with_defaults();
            fresh.add_dataset("r", Arc::new(graph.clone()));
            let wire = encode_request(r);
            let raw = match &wire {
                spf::wire::WireRequest::Get(q) => RawRequest::Get(q),
                spf::wire::WireRequest::Post(b) => RawRequest::Post(b),
            };
            fresh.handle_raw("r", raw)
        })
        .collect();
    for seed in 0..5u64 {
        let mut order: Vec<usize> = (0..requests.len()).chain(0..requests.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut sources: Vec<LocalSource> = (0..4).map(|_| LocalSource::new(server.clone(), "r")).collect();
        for s in &mut sources {
            s.capture();
        }
        for (k, &i) in order.iter().enumerate() {
            let src = &mut sources[k % 4];
            src.fetch(&requests[i]).unwrap();
            let ex = src.take_capture().pop().unwrap();
            assert_eq!(ex.status, isolated[i].status);
            assert_eq!(ex.body, isolated[i].body, "request {i} after {k} others");
        }
    }
}

#[test]
fn concurrent_http_clients_see_identical_bodies() {
    let (graph, requests) = random_requests(13, 40);
    let requests = &requests;
    let n = requests.len();
    let h = serve(vec![("r", graph)]);
    let url = h.dataset_url("r");
    let replay = |order: &[usize]| {
        let mut src = HttpSource::new(&url);
        src.capture();
        let mut out = vec![Vec::new(); requests.len()];
        for &i in order {
            src.fetch(&requests[i]).unwrap();
            out[i] = src.take_capture().pop().unwrap().body;
        }
        out
    };
    let baseline = replay(&(0..requests.len()).collect::<Vec<_>>());
    std::thread::scope(|s| {
        let workers: Vec<_> = (0..8u64)
            .map(|w| {
                let replay = &replay;
                s.spawn(move || {
                    let mut order: Vec<usize> = (0..n).collect();
                    order.shuffle(&mut ChaCha8Rng::seed_from_u64(w));
                    replay(&order)
                })
            })
            .collect();
        for w in workers {
            assert_eq!(w.join().unwrap(), baseline);
        }
    });
}

#[test]
fn client_errors_surface_as_rejections() {
    let h = serve(vec![("g0", g0())]);
    let mut missing = HttpSource::new(&format!("{}/nope", h.base()));
    let req = FragmentRequest {
        selector: SelectorSpec::Tp(two_star_query().patterns[0].clone()),
        page: 1,
    };
    assert!(matches!(missing.fetch(&req), Err(spf_core::SourceError::Rejected(m)) if m.starts_with("404")));
    let star = StarPattern::new(two_star_query().patterns[..3].to_vec()).unwrap();
    let omega = (0..31).map(|i| spf_core::SolutionMapping::new().with("a", ex(&format!("v{i}")))).collect();
    let mut ok = HttpSource::new(&h.dataset_url("g0"));
    let err = ok.fetch(&FragmentRequest { selector: SelectorSpec::Star(star, omega), page: 1 }).unwrap_err();
    assert!(matches!(err, spf_core::SourceError::Rejected(m) if m.starts_with("422")));
    drop(h);
    assert!(matches!(ok.fetch(&req), Err(spf_core::SourceError::Transport(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pages_survive_the_wire(seed in any::<u64>(), page in 1usize..4, page_size in 1usize..20) {
        let inst = common::random_instance(seed, 200, 3, 8);
        let selector = SelectorSpec::Star(inst.star.clone(), inst.omega.clone());
        let f = spf_core::make_fragment("http://h/d/fragment?selector=00", selector.clone(), &inst.graph);
        let p = spf_core::paginate(&f, page, page_size);
        let (body, len) = serialize_page(&p);
        prop_assert_eq!(body.len(), len);
        prop_assert_eq!(decode_page(&body, selector).unwrap(), p);
    }

    #[test]
    fn requests_survive_the_wire(seed in any::<u64>(), page in 1usize..5) {
        let (_, requests) = random_requests(seed, 4);
        for mut r in requests {
            r.page = page;
            let decoded = match encode_request(&r) {
                spf::wire::WireRequest::Get(q) => spf::wire::decode_tpf_query(&q).unwrap(),
                spf::wire::WireRequest::Post(b) => spf::wire::decode_request_body(&b).unwrap(),
            };
            prop_assert_eq!(decoded, (r.selector, r.page));
        }
    }
}
