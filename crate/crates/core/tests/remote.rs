mod common;

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use negforge::backend::{offline_negate, RemoteBackend};
use negforge::pipeline::{cmd_run, CorpusRecord, Overrides, RunConfig};
use negforge::{build_prompt, Backend, PromptString, BackendDescriptor, BackendError, SamplingParams, SpecialTokens};
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &Value) -> (u16, String) + Send + Sync;

/// Minimal HTTP/1.1 server answering each request with `handler(path, body)`.
struct MockServer {
    url: String,
    hits: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, Value)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let mut len = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some((path, serde_json::from_slice(&body).unwrap_or(Value::Null)))
}

impl MockServer {
    fn start(handler: Box<Handler>) -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&hits);
        let handler: Arc<Handler> = Arc::from(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let handler = Arc::clone(&handler);
                let counter = Arc::clone(&counter);
                thread::spawn(move || {
                    if let Some((path, body)) = read_request(&mut stream) {
                        counter.fetch_add(1, Ordering::SeqCst);
                        let (status, text) = handler(&path, &body);
                        let _ = write!(
                            stream,
                            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                            text.len()
                        );
                    }
                });
            }
        });
        MockServer { url, hits }
    }
}

fn descriptor(url: &str) -> BackendDescriptor {
    BackendDescriptor {
        retry_base_ms: 5,
        timeout_ms: 5_000,
        ..BackendDescriptor::remote(url)
    }
}

/// Answers `/generate` with the rule-based negator and `/score` with a flat
/// log-probability per word.
fn negating_handler(path: &str, body: &Value) -> (u16, String) {
    let toks = SpecialTokens::default();
    match path {
        "/generate" => {
            let prompt = PromptString::from_raw(body["prompt"].as_str().unwrap_or_default());
            let n = body["n"].as_u64().unwrap_or(1) as usize;
            let (original, masked) = prompt.split(&toks).unwrap();
            let pieces: Vec<&str> = masked.split(toks.blank.as_str()).collect();
            let spans = align(original, &pieces);
            let mut out = offline_negate(masked, &spans);
            out.truncate(n);
            (200, json!({ "completions": out }).to_string())
        }
        "/score" => {
            let words: Vec<&str> = body["text"].as_str().unwrap_or_default().split_whitespace().collect();
            let lps = vec![-std::f64::consts::LN_2; words.len()];
            (200, json!({ "tokens": words, "logprobs": lps }).to_string())
        }
        _ => (404, "{}".into()),
    }
}

fn align(original: &str, pieces: &[&str]) -> Vec<String> {
    let mut rest = original.strip_prefix(pieces[0]).unwrap_or(original);
    let mut spans = Vec::new();
    for (k, piece) in pieces[1..].iter().enumerate() {
        let last = k + 2 == pieces.len();
        let at = if piece.is_empty() && last {
            rest.len()
        } else if last {
            rest.len() - piece.len()
        } else {
            rest.find(piece).unwrap()
        };
        spans.push(rest[..at].trim().to_string());
        rest = &rest[at + piece.len()..];
    }
    spans
}

#[test]
fn generate_and_score_over_http() {
    let server = MockServer::start(Box::new(negating_handler));
    let backend = RemoteBackend::new(descriptor(&server.url)).unwrap();
    let toks = SpecialTokens::default();
    let p = build_prompt("They were cooking.", "They [BLANK] cooking.", &toks).unwrap();
    let out = backend
        .generate(
            &p,
            &SamplingParams {
                num_return: 2,
                ..SamplingParams::default()
            },
        )
        .unwrap();
    assert_eq!(out, vec!["weren't [ANSWER]", "were not [ANSWER]"]);
    let scored = backend.score("a b c").unwrap();
    assert_eq!(scored.tokens, vec!["a", "b", "c"]);
    assert_eq!(scored.logprobs.len(), 3);
}

#[test]
fn server_errors_are_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = Arc::clone(&calls);
    let server = MockServer::start(Box::new(move |_, _| {
        if c.fetch_add(1, Ordering::SeqCst) == 0 {
            (503, "busy".into())
        } else {
            (200, json!({ "completions": ["no [ANSWER]"] }).to_string())
        }
    }));
    let backend = RemoteBackend::new(descriptor(&server.url)).unwrap();
    let p = build_prompt("a b.", "a [BLANK].", &SpecialTokens::default()).unwrap();
    let out = backend.generate(&p, &SamplingParams::default()).unwrap();
    assert_eq!(out, vec!["no [ANSWER]"]);
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn client_errors_and_bad_bodies_are_not_retried() {
    let server = MockServer::start(Box::new(|path, _| match path {
        "/generate" => (400, "bad prompt".into()),
        _ => (200, "not json".into()),
    }));
    let backend = RemoteBackend::new(descriptor(&server.url)).unwrap();
    let p = build_prompt("a b.", "a [BLANK].", &SpecialTokens::default()).unwrap();
    match backend.generate(&p, &SamplingParams::default()) {
        Err(BackendError::Status { status: 400, body }) => assert_eq!(body, "bad prompt"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(backend.score("x"), Err(BackendError::Malformed(_))));
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_server_gives_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = RemoteBackend::new(descriptor(&format!("http://127.0.0.1:{port}"))).unwrap();
    let p = build_prompt("a b.", "a [BLANK].", &SpecialTokens::default()).unwrap();
    let err = backend.generate(&p, &SamplingParams::default()).unwrap_err();
    assert!(matches!(err, BackendError::Transport(_)), "{err:?}");
}

#[test]
fn pipeline_with_remote_backend_reports_perplexity() {
    let server = MockServer::start(Box::new(negating_handler));
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::resolve(
        None,
        Overrides {
            backend_url: Some(server.url.clone()),
            input: Some(common::fixture("rules.conllu")),
            output: Some(dir.path().join("out.jsonl")),
            seed: Some(3),
            ..Overrides::default()
        },
    )
    .unwrap();
    cfg.backend.retry_base_ms = 5;
    let (summary, report) = cmd_run(&cfg).unwrap();
    assert_eq!(summary.sentences, 12);
    assert!(summary.kept > 0);
    let ppl = report.ppl.expect("scoring backend gives perplexity");
    assert!((ppl.mean - 2.0).abs() < 1e-9);
    let text = fs::read_to_string(dir.path().join("out.jsonl")).unwrap();
    let first: CorpusRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first.generations.is_some());
}
