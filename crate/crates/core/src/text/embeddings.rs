//! Document embeddings produced outside this crate.
//!
//! Vectors come either from a JSONL cache file or from an HTTP encoder
//! service (`POST {base_url}/embed`). Service responses are written through
//! to the cache so later runs can work offline.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{TextKind, TextRepresentation};
use crate::error::{Error, Result};
use crate::profile::Diagnostic;

/// Width of the sequence-level encoder output.
pub const EMBEDDING_DIM: usize = 768;

/// One line of the embedding cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub id: String,
    pub dim: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub base_url: String,
    /// Responses are appended here when set.
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_timeout", with = "secs")]
    pub timeout: Duration,
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// First retry delay; doubled on each further attempt.
    #[serde(default = "default_backoff", with = "secs")]
    pub backoff: Duration,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_model() -> String {
    "bert-base-uncased".into()
}
fn default_timeout() -> Duration {
    Duration::from_secs(30)
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> Duration {
    Duration::from_millis(500)
}
fn default_batch() -> usize {
    32
}
fn default_in_flight() -> usize {
    4
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl ServiceConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            cache_path: None,
            model: default_model(),
            timeout: default_timeout(),
            retries: default_retries(),
            backoff: default_backoff(),
            batch_size: default_batch(),
            max_in_flight: default_in_flight(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingGateway {
    Cache(PathBuf),
    Service(ServiceConfig),
}

/// Loads a cache file into memory, checking every entry's width.
pub fn read_embedding_cache(path: &Path) -> Result<HashMap<String, Vec<f64>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut map = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CacheEntry =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
        if entry.dim != EMBEDDING_DIM || entry.values.len() != EMBEDDING_DIM {
            return Err(Error::DimensionMismatch {
                expected: EMBEDDING_DIM,
                actual: if entry.dim != EMBEDDING_DIM { entry.dim } else { entry.values.len() },
            });
        }
        map.insert(entry.id, entry.values);
    }
    Ok(map)
}

/// Writes (or appends) cache entries, one JSON object per line.
pub fn write_embedding_cache<'a, I>(path: &Path, entries: I, append: bool) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let file = OpenOptions::new().create(true).write(true).append(append).truncate(!append).open(path)?;
    let mut out = BufWriter::new(file);
    for (id, values) in entries {
        let entry = CacheEntry { id: id.to_owned(), dim: values.len(), values: values.to_vec() };
        serde_json::to_writer(&mut out, &entry)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// One 768-dim vector per `(id, text)` pair, in input order.
///
/// Diagnostics carry the 1-based position of the affected item.
pub fn get_document_embeddings(
    items: &[(String, String)],
    gateway: &EmbeddingGateway,
) -> Result<(Vec<TextRepresentation>, Vec<Diagnostic>)> {
    if items.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    match gateway {
        EmbeddingGateway::Cache(path) => {
            let cache = read_embedding_cache(path)?;
            let reps = items
                .iter()
                .map(|(id, _)| {
                    cache
                        .get(id)
                        .map(|v| TextRepresentation::new(TextKind::DocEmbedding, v.clone()))
                        .ok_or_else(|| Error::CacheMiss(id.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((reps, Vec::new()))
        }
        EmbeddingGateway::Service(cfg) => service::fetch(items, cfg),
    }
}

#[cfg(feature = "http")]
#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    texts: Vec<&'a str>,
}

#[cfg(feature = "http")]
#[derive(Debug, Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
    dim: usize,
    model: String,
    #[serde(default)]
    truncated: Vec<bool>,
}

#[cfg(feature = "http")]
fn check_response(resp: &EmbedResponse, cfg: &ServiceConfig, expected_len: usize) -> Result<()> {
    if resp.model != cfg.model {
        return Err(Error::Service(format!("service model {:?}, expected {:?}", resp.model, cfg.model)));
    }
    if resp.dim != EMBEDDING_DIM {
        return Err(Error::DimensionMismatch { expected: EMBEDDING_DIM, actual: resp.dim });
    }
    if let Some(bad) = resp.embeddings.iter().find(|e| e.len() != EMBEDDING_DIM) {
        return Err(Error::DimensionMismatch { expected: EMBEDDING_DIM, actual: bad.len() });
    }
    if resp.embeddings.len() != expected_len {
        return Err(Error::Service(format!("asked for {expected_len} embeddings, received {}", resp.embeddings.len())));
    }
    Ok(())
}

#[cfg(feature = "http")]
mod service {
    use std::thread;

    use super::*;

    struct Client {
        agent: ureq::Agent,
        url: String,
    }

    #[derive(Debug)]
    enum Attempt {
        Retryable(String),
        Fatal(Error),
    }

    impl Client {
        fn new(cfg: &ServiceConfig) -> Self {
            let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(cfg.timeout)).build().into();
            let url = format!("{}/embed", cfg.base_url.trim_end_matches('/'));
            Self { agent, url }
        }

        fn post_once(&self, texts: &[&str], cfg: &ServiceConfig) -> std::result::Result<EmbedResponse, Attempt> {
            let mut resp =
                self.agent.post(&self.url).send_json(EmbedRequest { texts: texts.to_vec() }).map_err(|e| match e {
                    ureq::Error::StatusCode(code) if code < 500 && code != 429 => {
                        Attempt::Fatal(Error::Service(format!("HTTP {code} from {}", self.url)))
                    }
                    other => Attempt::Retryable(other.to_string()),
                })?;
            let body: EmbedResponse = resp
                .body_mut()
                .read_json()
                .map_err(|e| Attempt::Fatal(Error::Service(format!("bad response body: {e}"))))?;
            check_response(&body, cfg, texts.len()).map_err(Attempt::Fatal)?;
            Ok(body)
        }

        fn post(&self, texts: &[&str], cfg: &ServiceConfig) -> Result<EmbedResponse> {
            let mut delay = cfg.backoff;
            let mut last = String::new();
            for attempt in 0..=cfg.retries {
                if attempt > 0 {
                    thread::sleep(delay);
                    delay *= 2;
                }
                match self.post_once(texts, cfg) {
                    Ok(r) => return Ok(r),
                    Err(Attempt::Fatal(e)) => return Err(e),
                    Err(Attempt::Retryable(msg)) => {
                        log::warn!("embedding request failed (attempt {}): {msg}", attempt + 1);
                        last = msg;
                    }
                }
            }
            Err(Error::Service(format!("unreachable after {} attempts: {last}", cfg.retries + 1)))
        }
    }

    pub(super) fn fetch(
        items: &[(String, String)],
        cfg: &ServiceConfig,
    ) -> Result<(Vec<TextRepresentation>, Vec<Diagnostic>)> {
        let mut cached = match &cfg.cache_path {
            Some(p) if p.exists() => read_embedding_cache(p)?,
            _ => HashMap::new(),
        };
        let mut missing: Vec<usize> = Vec::new();
        for (i, (id, _)) in items.iter().enumerate() {
            if !cached.contains_key(id) && !missing.iter().any(|&j| items[j].0 == *id) {
                missing.push(i);
            }
        }

        let client = Client::new(cfg);
        let batches: Vec<&[usize]> = missing.chunks(cfg.batch_size.max(1)).collect();
        let mut responses: Vec<Option<Result<EmbedResponse>>> = Vec::with_capacity(batches.len());
        for wave in batches.chunks(cfg.max_in_flight.max(1)) {
            let results: Vec<Result<EmbedResponse>> = thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| {
                        let client = &client;
                        s.spawn(move || {
                            let texts: Vec<&str> = batch.iter().map(|&i| items[i].1.as_str()).collect();
                            client.post(&texts, cfg)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or_else(|_| Err(Error::Service("worker panicked".into()))))
                    .collect()
            });
            responses.extend(results.into_iter().map(Some));
        }

        let mut diagnostics = Vec::new();
        let mut fresh: Vec<(usize, Vec<f64>)> = Vec::with_capacity(missing.len());
        for (batch, resp) in batches.iter().zip(responses) {
            let resp = resp.expect("one response per batch")?;
            for (k, (&i, values)) in batch.iter().zip(resp.embeddings).enumerate() {
                if resp.truncated.get(k).copied().unwrap_or(false) {
                    diagnostics.push(Diagnostic {
                        line: i + 1,
                        message: format!("{}: text truncated by the encoder service", items[i].0),
                    });
                }
                fresh.push((i, values));
            }
        }

        if let Some(path) = &cfg.cache_path {
            write_embedding_cache(path, fresh.iter().map(|(i, v)| (items[*i].0.as_str(), v.as_slice())), true)?;
        }
        for (i, v) in fresh {
            cached.insert(items[i].0.clone(), v);
        }
        let reps =
            items.iter().map(|(id, _)| TextRepresentation::new(TextKind::DocEmbedding, cached[id].clone())).collect();
        Ok((reps, diagnostics))
    }
}

#[cfg(not(feature = "http"))]
mod service {
    use super::*;

    pub(super) fn fetch(
        _items: &[(String, String)],
        _cfg: &ServiceConfig,
    ) -> Result<(Vec<TextRepresentation>, Vec<Diagnostic>)> {
        Err(Error::Service("built without the `http` feature".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(seed: f64) -> Vec<f64> {
        (0..EMBEDDING_DIM).map(|j| seed + j as f64 * 1e-3 + 0.1234567890123).collect()
    }

    #[test]
    fn empty_request() {
        let gw = EmbeddingGateway::Cache(PathBuf::from("/nonexistent"));
        let (reps, diags) = get_document_embeddings(&[], &gw).unwrap();
        assert!(reps.is_empty() && diags.is_empty());
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let a = vector(0.3);
        let b = vector(-1.7e-5);
        write_embedding_cache(&path, [("a", a.as_slice()), ("b", b.as_slice())], false).unwrap();
        let gw = EmbeddingGateway::Cache(path);
        let items = vec![("b".to_string(), String::new()), ("a".to_string(), String::new())];
        let (reps, _) = get_document_embeddings(&items, &gw).unwrap();
        assert_eq!(reps[0].values, b);
        assert_eq!(reps[1].values, a);
        assert!(reps.iter().all(|r| r.kind == TextKind::DocEmbedding && r.dim() == EMBEDDING_DIM));

        let miss = vec![("zzz".to_string(), String::new())];
        assert!(matches!(get_document_embeddings(&miss, &gw), Err(Error::CacheMiss(id)) if id == "zzz"));
    }

    #[test]
    fn cache_rejects_wrong_width() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        write_embedding_cache(&path, [("a", &[1.0, 2.0][..])], false).unwrap();
        assert!(matches!(read_embedding_cache(&path), Err(Error::DimensionMismatch { expected: 768, actual: 2 })));
    }

    #[cfg(feature = "http")]
    #[test]
    fn response_contract() {
        let cfg = ServiceConfig::new("http://localhost:1");
        let resp = EmbedResponse {
            embeddings: vec![vec![0.0; 384]],
            dim: 384,
            model: "bert-base-uncased".into(),
            truncated: vec![],
        };
        let err = check_response(&resp, &cfg, 1).unwrap_err();
        assert!(err.to_string().contains("expected 768"));
    }
}
