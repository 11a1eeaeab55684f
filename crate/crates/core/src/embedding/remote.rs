//! Client for a batch embedding service.
//!
//! Wire protocol: `POST <endpoint>/embed` with `{"texts": [..]}`; a 200
//! response carries `{"dim": d, "vectors": [[..], ..]}` in request order, any
//! other status carries `{"error": ".."}`. Texts are split into batches of
//! `batch_size`, at most `max_in_flight` requests run at once, and rows are
//! reassembled in input order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingProvider};
use crate::ontology::Iri;

/// Environment variable that overrides the configured endpoint.
pub const ENDPOINT_ENV: &str = "POLYALIGN_EMBED_ENDPOINT";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL; `/embed` is appended.
    pub endpoint: String,
    pub batch_size: usize,
    pub timeout: Duration,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            batch_size: 64,
            timeout: super::default_timeout(),
            max_in_flight: 4,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), EmbeddingError> {
        if self.batch_size == 0 {
            return Err(EmbeddingError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(EmbeddingError::InvalidConfig("max_in_flight must be at least 1".into()));
        }
        url::Url::parse(&self.endpoint)
            .map_err(|e| EmbeddingError::InvalidConfig(format!("endpoint {:?}: {e}", self.endpoint)))?;
        Ok(())
    }

    fn embed_url(&self) -> String {
        format!("{}/embed", self.endpoint.trim_end_matches('/'))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ErrorResponse {
    error: String,
}

pub struct RemoteService {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteService {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn post(&self, texts: &[(Iri, String)]) -> Result<EmbedResponse, EmbeddingError> {
        let body = EmbedRequest {
            texts: texts.iter().map(|(_, t)| t.as_str()).collect(),
        };
        let mut resp = self
            .agent
            .post(&self.config.embed_url())
            .send_json(&body)
            .map_err(transport_error)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(transport_error)?;
        if status != 200 {
            let body = serde_json::from_str::<ErrorResponse>(&text)
                .map(|e| e.error)
                .unwrap_or(text);
            return Err(EmbeddingError::ServiceError { status, body });
        }
        let parsed: EmbedResponse = serde_json::from_str(&text).map_err(|e| EmbeddingError::ServiceError {
            status,
            body: format!("invalid response body: {e}"),
        })?;
        if parsed.vectors.len() != texts.len() {
            return Err(EmbeddingError::ServiceError {
                status,
                body: format!("expected {} vectors, got {}", texts.len(), parsed.vectors.len()),
            });
        }
        if parsed.dim == 0 {
            return Err(EmbeddingError::ServiceError {
                status,
                body: "response dim is zero".into(),
            });
        }
        if let Some(v) = parsed.vectors.iter().find(|v| v.len() != parsed.dim) {
            return Err(EmbeddingError::DimensionMismatch {
                expected: parsed.dim,
                found: v.len(),
            });
        }
        Ok(parsed)
    }
}

fn transport_error(e: ureq::Error) -> EmbeddingError {
    match e {
        ureq::Error::Timeout(_) => EmbeddingError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => EmbeddingError::Timeout,
        other => EmbeddingError::Transport(other.to_string()),
    }
}

impl EmbeddingProvider for RemoteService {
    fn id(&self) -> String {
        format!("remote:{}", self.config.endpoint)
    }

    fn embed_raw(&self, texts: &[(Iri, String)]) -> Result<Array2<f64>, EmbeddingError> {
        let batches: Vec<&[(Iri, String)]> = texts.chunks(self.config.batch_size).collect();
        let results: Mutex<Vec<Option<Result<EmbedResponse, EmbeddingError>>>> =
            Mutex::new((0..batches.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(batches.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(batch) = batches.get(i) else {
                        break;
                    };
                    let result = self.post(batch);
                    let failed = result.is_err();
                    results.lock().expect("result slots poisoned")[i] = Some(result);
                    if failed {
                        // Stop handing out work; batches already in flight finish.
                        next.store(batches.len(), Ordering::SeqCst);
                    }
                });
            }
        });

        let mut dim = None;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(texts.len());
        for slot in results.into_inner().expect("result slots poisoned") {
            let Some(result) = slot else {
                continue;
            };
            let resp = result?;
            match dim {
                None => dim = Some(resp.dim),
                Some(d) if d != resp.dim => {
                    return Err(EmbeddingError::DimensionMismatch {
                        expected: d,
                        found: resp.dim,
                    })
                }
                _ => {}
            }
            rows.extend(resp.vectors);
        }
        let dim = dim.ok_or(EmbeddingError::EmptyInput)?;
        if rows.len() != texts.len() {
            return Err(EmbeddingError::Transport("incomplete batch results".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Array2::from_shape_vec((texts.len(), dim), flat)
            .map_err(|e| EmbeddingError::Transport(format!("assembling rows: {e}")))
    }
}
