#![cfg(feature = "http")]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde_json::json;
use vfuse_core::text::{get_document_embeddings, EmbeddingGateway, ServiceConfig, EMBEDDING_DIM};
use vfuse_core::Error;

#[derive(Clone, Copy)]
enum Behaviour {
    Normal,
    FailFirst,
    BadRequest,
    WrongDim,
}

/// Vector whose first component is the text length, so tests can check order.
fn vector_for(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = text.len() as f64;
    v[1] = 1.0;
    v
}

struct Mock {
    url: String,
    requests: Arc<AtomicUsize>,
}

fn serve(behaviour: Behaviour) -> Mock {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = requests.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0u8; length];
            if reader.read_exact(&mut body).is_err() {
                continue;
            }
            let seen = counter.fetch_add(1, Ordering::SeqCst);
            let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
            let texts: Vec<String> = request["texts"]
                .as_array()
                .map(|a| a.iter().map(|t| t.as_str().unwrap_or_default().to_string()).collect())
                .unwrap_or_default();
            let (status, payload) = match behaviour {
                Behaviour::FailFirst if seen == 0 => ("500 Internal Server Error", json!({"error": "busy"})),
                Behaviour::BadRequest => ("400 Bad Request", json!({"error": "no"})),
                _ => {
                    let dim = if matches!(behaviour, Behaviour::WrongDim) { 16 } else { EMBEDDING_DIM };
                    let embeddings: Vec<Vec<f64>> = texts.iter().map(|t| vector_for(t, dim)).collect();
                    let truncated = vec![false; texts.len()];
                    (
                        "200 OK",
                        json!({"embeddings": embeddings, "dim": dim, "model": "bert-base-uncased", "truncated": truncated}),
                    )
                }
            };
            let body = payload.to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.flush();
        }
    });
    Mock { url, requests }
}

fn items(n: usize) -> Vec<(String, String)> {
    (0..n).map(|i| (format!("id{i}"), "x".repeat(i + 1))).collect()
}

fn config(url: &str) -> ServiceConfig {
    let mut cfg = ServiceConfig::new(url);
    cfg.batch_size = 2;
    cfg.max_in_flight = 2;
    cfg.backoff = Duration::from_millis(10);
    cfg.timeout = Duration::from_secs(5);
    cfg
}

#[test]
fn batches_keep_input_order_and_fill_the_cache() {
    let mock = serve(Behaviour::Normal);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&mock.url);
    cfg.cache_path = Some(dir.path().join("cache.jsonl"));
    let gateway = EmbeddingGateway::Service(cfg.clone());

    let (reps, diagnostics) = get_document_embeddings(&items(5), &gateway).unwrap();
    assert!(diagnostics.is_empty());
    assert_eq!(reps.len(), 5);
    for (i, r) in reps.iter().enumerate() {
        assert_eq!(r.dim(), EMBEDDING_DIM);
        assert_eq!(r.values[0], (i + 1) as f64);
    }
    assert_eq!(mock.requests.load(Ordering::SeqCst), 3);

    // everything is cached now
    let (again, _) = get_document_embeddings(&items(5), &gateway).unwrap();
    assert_eq!(again, reps);
    assert_eq!(mock.requests.load(Ordering::SeqCst), 3);

    let (cached, _) = get_document_embeddings(&items(5), &EmbeddingGateway::Cache(cfg.cache_path.unwrap())).unwrap();
    assert_eq!(cached, reps);
}

#[test]
fn server_errors_are_retried() {
    let mock = serve(Behaviour::FailFirst);
    let mut cfg = config(&mock.url);
    cfg.batch_size = 8;
    let (reps, _) = get_document_embeddings(&items(3), &EmbeddingGateway::Service(cfg)).unwrap();
    assert_eq!(reps.len(), 3);
    assert_eq!(mock.requests.load(Ordering::SeqCst), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let mock = serve(Behaviour::BadRequest);
    let err = get_document_embeddings(&items(1), &EmbeddingGateway::Service(config(&mock.url))).unwrap_err();
    assert!(matches!(err, Error::Service(_)), "{err}");
    assert_eq!(mock.requests.load(Ordering::SeqCst), 1);
}

#[test]
fn wrong_dimension_is_rejected() {
    let mock = serve(Behaviour::WrongDim);
    let err = get_document_embeddings(&items(2), &EmbeddingGateway::Service(config(&mock.url))).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { expected: EMBEDDING_DIM, actual: 16 }), "{err}");
}

#[test]
fn unreachable_service_fails_after_retries() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let mut cfg = config(&url);
    cfg.retries = 1;
    let err = get_document_embeddings(&items(1), &EmbeddingGateway::Service(cfg)).unwrap_err();
    assert!(matches!(err, Error::Service(_)), "{err}");
}
