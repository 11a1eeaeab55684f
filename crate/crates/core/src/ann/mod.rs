//! Product-quantized approximate nearest-neighbor search.
//!
//! Vectors are split into `m` equal subspaces; each subspace gets its own
//! k-means codebook of `kc` centroids and every vector is stored as `m`
//! centroid indices. Queries are scored asymmetrically: the raw query is
//! dotted with every centroid once (a lookup table per subspace) and each
//! stored vector's approximate score is the sum of its `m` table entries.

mod io;
mod kmeans;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::embedding::EmbeddingMatrix;
use crate::matcher::dot;
use crate::ontology::Iri;

pub use io::{read_index, write_index, MAGIC, VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum AnnError {
    #[error("dimension {d} is not divisible into {m} subspaces")]
    BadShape { d: usize, m: usize },
    #[error("{n} vectors cannot train {kc} centroids")]
    TooFewVectors { n: usize, kc: usize },
    #[error("at most 65536 centroids per subspace are supported, got {0}")]
    TooManyCentroids(usize),
    #[error("query has dimension {found}, index expects {expected}")]
    QueryDimension { expected: usize, found: usize },
    #[error("index file: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PqIndex {
    m: usize,
    kc: usize,
    d: usize,
    /// `codebooks[s][c]` is centroid `c` of subspace `s`, length `d / m`.
    codebooks: Vec<Vec<Vec<f64>>>,
    /// `codes[row][s]` is the centroid index of `row` in subspace `s`.
    codes: Vec<Vec<u16>>,
    keys: Vec<Iri>,
}

impl PqIndex {
    pub fn subspaces(&self) -> usize {
        self.m
    }

    pub fn centroids(&self) -> usize {
        self.kc
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[Iri] {
        &self.keys
    }

    pub fn codes(&self) -> &[Vec<u16>] {
        &self.codes
    }

    pub fn codebooks(&self) -> &[Vec<Vec<f64>>] {
        &self.codebooks
    }

    /// Concatenated centroids for one stored row.
    pub fn reconstruct(&self, row: usize) -> Vec<f64> {
        self.codes[row]
            .iter()
            .enumerate()
            .flat_map(|(s, &c)| self.codebooks[s][c as usize].iter().copied())
            .collect()
    }

    fn sub_dim(&self) -> usize {
        self.d / self.m
    }
}

pub fn build_pq(vectors: &EmbeddingMatrix, m: usize, kc: usize, seed: u64) -> Result<PqIndex, AnnError> {
    let (n, d) = (vectors.len(), vectors.dim());
    if m == 0 || d % m != 0 {
        return Err(AnnError::BadShape { d, m });
    }
    if kc == 0 || n < kc {
        return Err(AnnError::TooFewVectors { n, kc });
    }
    if kc > usize::from(u16::MAX) + 1 {
        return Err(AnnError::TooManyCentroids(kc));
    }
    let sub = d / m;
    let rows = vectors.rows().as_standard_layout();
    let flat = rows.as_slice().expect("standard layout");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut codebooks = Vec::with_capacity(m);
    let mut codes = vec![vec![0u16; m]; n];
    for s in 0..m {
        let points: Vec<&[f64]> = (0..n).map(|i| &flat[i * d + s * sub..i * d + (s + 1) * sub]).collect();
        let (centroids, assignment) = kmeans::kmeans(&points, kc, &mut rng);
        for (row, a) in assignment.into_iter().enumerate() {
            codes[row][s] = a as u16;
        }
        codebooks.push(centroids);
    }
    Ok(PqIndex {
        m,
        kc,
        d,
        codebooks,
        codes,
        keys: vectors.row_keys().to_vec(),
    })
}

fn rank(mut scored: Vec<(Iri, f64)>, k: usize) -> Vec<(Iri, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Approximate top-`k` by asymmetric distance computation, descending, ties by IRI.
pub fn query_topk(index: &PqIndex, query: &[f64], k: usize) -> Vec<(Iri, f64)> {
    try_query_topk(index, query, k).expect("query dimension matches the index")
}

pub fn try_query_topk(index: &PqIndex, query: &[f64], k: usize) -> Result<Vec<(Iri, f64)>, AnnError> {
    if query.len() != index.d {
        return Err(AnnError::QueryDimension {
            expected: index.d,
            found: query.len(),
        });
    }
    let sub = index.sub_dim();
    let tables: Vec<Vec<f64>> = index
        .codebooks
        .iter()
        .enumerate()
        .map(|(s, book)| {
            let q = &query[s * sub..(s + 1) * sub];
            book.iter().map(|c| dot(q, c)).collect()
        })
        .collect();
    let scored = index
        .keys
        .iter()
        .zip(&index.codes)
        .map(|(key, code)| {
            let score: f64 = code.iter().zip(&tables).map(|(&c, t)| t[c as usize]).sum();
            (key.clone(), score)
        })
        .collect();
    Ok(rank(scored, k))
}

/// Exhaustive cosine ranking with the same ordering rule as [`query_topk`].
pub fn exact_topk(vectors: &EmbeddingMatrix, query: &[f64], k: usize) -> Vec<(Iri, f64)> {
    let rows = vectors.rows().as_standard_layout();
    let scored = vectors
        .row_keys()
        .iter()
        .zip(rows.outer_iter())
        .map(|(key, row)| (key.clone(), dot(query, row.as_slice().expect("contiguous row"))))
        .collect();
    rank(scored, k)
}
