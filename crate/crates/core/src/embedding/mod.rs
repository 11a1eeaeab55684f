//! Text embedding providers.
//!
//! Every provider returns an [`EmbeddingMatrix`] whose rows are L2-normalized,
//! so dot products between rows are cosine similarities. No neural model runs
//! in-process: real model vectors come from a precomputed file or a remote
//! service speaking the `/embed` protocol.

mod file;
mod hash;
mod remote;

use std::path::PathBuf;
use std::time::Duration;

use ndarray::{Array2, ArrayView1};
use thiserror::Error;

use crate::ontology::Iri;

pub use file::{FileVectors, VectorTable};
pub use hash::{trigrams, HashEmbedder};
pub use remote::{RemoteConfig, RemoteService, ENDPOINT_ENV};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("no texts to embed")]
    EmptyInput,
    #[error("empty text for {0}")]
    EmptyText(Iri),
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
    #[error("no vector for {0}")]
    MissingVector(Iri),
    #[error("embedding service returned {status}: {body}")]
    ServiceError { status: u16, body: String },
    #[error("embedding service timed out")]
    Timeout,
    #[error("embedding service transport error: {0}")]
    Transport(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row {0} is a zero vector and cannot be normalized")]
    ZeroVector(usize),
    #[error("vector file line {line}: {detail}")]
    MalformedVectorFile { line: usize, detail: String },
    #[error("I/O error: {0}")]
    Io(String),
}

/// Row-per-entity unit vectors, tagged with the provider that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: Array2<f64>,
    provider_id: String,
    row_keys: Vec<Iri>,
}

impl EmbeddingMatrix {
    /// Normalizes `raw` row-wise and pairs each row with its key.
    pub fn from_raw(raw: Array2<f64>, row_keys: Vec<Iri>, provider_id: impl Into<String>) -> Result<Self, EmbeddingError> {
        if raw.nrows() != row_keys.len() {
            return Err(EmbeddingError::DimensionMismatch {
                expected: row_keys.len(),
                found: raw.nrows(),
            });
        }
        if raw.ncols() == 0 {
            return Err(EmbeddingError::InvalidConfig("zero-dimensional vectors".into()));
        }
        let raw = raw.as_standard_layout().into_owned();
        Ok(Self {
            rows: normalize_rows(raw)?,
            provider_id: provider_id.into(),
            row_keys,
        })
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.rows.row(i)
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn len(&self) -> usize {
        self.row_keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_keys.is_empty()
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn row_keys(&self) -> &[Iri] {
        &self.row_keys
    }
}

/// Divides every row by its Euclidean norm.
pub fn normalize_rows(mut matrix: Array2<f64>) -> Result<Array2<f64>, EmbeddingError> {
    for (i, mut row) in matrix.rows_mut().into_iter().enumerate() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbeddingError::ZeroVector(i));
        }
        row.mapv_inplace(|x| x / norm);
    }
    Ok(matrix)
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> String;

    /// Embeds texts in order. Implementations return raw (unnormalized) rows.
    fn embed_raw(&self, texts: &[(Iri, String)]) -> Result<Array2<f64>, EmbeddingError>;

    fn embed(&self, texts: &[(Iri, String)]) -> Result<EmbeddingMatrix, EmbeddingError> {
        if texts.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        if let Some((iri, _)) = texts.iter().find(|(_, t)| t.trim().is_empty()) {
            return Err(EmbeddingError::EmptyText(iri.clone()));
        }
        let raw = self.embed_raw(texts)?;
        let keys = texts.iter().map(|(iri, _)| iri.clone()).collect();
        EmbeddingMatrix::from_raw(raw, keys, self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderConfig {
    HashTest { dimension: usize },
    FileVectors { path: PathBuf },
    RemoteService(RemoteConfig),
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        match self {
            ProviderConfig::HashTest { dimension } if *dimension < 8 => Err(EmbeddingError::InvalidConfig(format!(
                "hash embedding dimension must be at least 8, got {dimension}"
            ))),
            ProviderConfig::RemoteService(cfg) => cfg.validate(),
            _ => Ok(()),
        }
    }

    /// Builds the provider; the vector file is read here, once.
    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>, EmbeddingError> {
        self.validate()?;
        Ok(match self {
            ProviderConfig::HashTest { dimension } => Box::new(HashEmbedder::new(*dimension)),
            ProviderConfig::FileVectors { path } => Box::new(FileVectors::open(path)?),
            ProviderConfig::RemoteService(cfg) => Box::new(RemoteService::new(cfg.clone())),
        })
    }
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::HashTest { dimension: 256 }
    }
}

/// Builds the provider described by `config` and embeds `texts` with it.
pub fn embed_batch(texts: &[(Iri, String)], config: &ProviderConfig) -> Result<EmbeddingMatrix, EmbeddingError> {
    config.build()?.embed(texts)
}

pub(crate) fn default_timeout() -> Duration {
    Duration::from_secs(60)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn three_four_five() {
        let n = normalize_rows(array![[3.0, 4.0]]).unwrap();
        assert_abs_diff_eq!(n[[0, 0]], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(n[[0, 1]], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn unit_rows_unchanged() {
        let unit = array![[0.6, 0.8], [1.0, 0.0]];
        let n = normalize_rows(unit.clone()).unwrap();
        for (a, b) in n.iter().zip(unit.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_row_rejected() {
        assert_eq!(normalize_rows(array![[1.0, 0.0], [0.0, 0.0]]), Err(EmbeddingError::ZeroVector(1)));
    }

    #[test]
    fn config_validation() {
        assert!(ProviderConfig::HashTest { dimension: 4 }.build().is_err());
        assert!(ProviderConfig::HashTest { dimension: 8 }.build().is_ok());
        let remote = RemoteConfig {
            batch_size: 0,
            ..RemoteConfig::new("http://localhost:1")
        };
        assert!(matches!(
            ProviderConfig::RemoteService(remote).validate(),
            Err(EmbeddingError::InvalidConfig(_))
        ));
    }

    #[test]
    fn empty_inputs_rejected() {
        let cfg = ProviderConfig::HashTest { dimension: 16 };
        assert_eq!(embed_batch(&[], &cfg), Err(EmbeddingError::EmptyInput));
        let iri = Iri::new("http://e/a").unwrap();
        assert_eq!(
            embed_batch(&[(iri.clone(), "  ".into())], &cfg),
            Err(EmbeddingError::EmptyText(iri))
        );
    }
}
