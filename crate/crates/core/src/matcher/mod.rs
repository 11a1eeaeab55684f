//! Cross-lingual correspondence extraction.
//!
//! Stages run in a fixed order: cosine similarity matrix, mutual top-k
//! candidates, one-to-one assignment, confidence threshold, then the kind
//! compatibility filter. Each stage is also exposed on its own.

mod hungarian;

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ann::{self, AnnError, PqIndex};
use crate::embedding::EmbeddingMatrix;
use crate::ontology::{EntityKind, Iri};
use crate::reasoner::InferredOntology;

pub use hungarian::assign as assign_candidates;

/// Rows per parallel block when filling the similarity matrix.
pub const DEFAULT_BLOCK_ROWS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("embedding dimensions differ: source {source_dim}, target {target_dim}")]
    DimensionMismatch { source_dim: usize, target_dim: usize },
    #[error("invalid matcher configuration: {0}")]
    InvalidConfig(String),
    #[error("approximate search failed: {0}")]
    Ann(#[from] AnnError),
}

/// `scores[i][j]` is the cosine between source row `i` and target row `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    scores: Array2<f64>,
    source_keys: Vec<Iri>,
    target_keys: Vec<Iri>,
}

impl SimilarityMatrix {
    pub fn new(scores: Array2<f64>, source_keys: Vec<Iri>, target_keys: Vec<Iri>) -> Result<Self, MatchError> {
        if scores.nrows() != source_keys.len() || scores.ncols() != target_keys.len() {
            return Err(MatchError::InvalidConfig(format!(
                "score matrix is {}x{} but there are {} source and {} target keys",
                scores.nrows(),
                scores.ncols(),
                source_keys.len(),
                target_keys.len()
            )));
        }
        Ok(Self {
            scores,
            source_keys,
            target_keys,
        })
    }

    /// Matrix keyed by positional IRIs, for tests and synthetic inputs.
    pub fn from_scores(scores: Array2<f64>) -> Self {
        let keys = |prefix: &str, n: usize| {
            (0..n)
                .map(|i| Iri::new(format!("urn:{prefix}:{i:06}")).expect("valid IRI"))
                .collect()
        };
        let (p, q) = scores.dim();
        Self {
            source_keys: keys("src", p),
            target_keys: keys("tgt", q),
            scores,
        }
    }

    pub fn scores(&self) -> &Array2<f64> {
        &self.scores
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[[i, j]]
    }

    pub fn dim(&self) -> (usize, usize) {
        self.scores.dim()
    }

    pub fn source_keys(&self) -> &[Iri] {
        &self.source_keys
    }

    pub fn target_keys(&self) -> &[Iri] {
        &self.target_keys
    }

    pub fn transposed(&self) -> SimilarityMatrix {
        SimilarityMatrix {
            scores: self.scores.t().to_owned(),
            source_keys: self.target_keys.clone(),
            target_keys: self.source_keys.clone(),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn similarity_matrix(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<SimilarityMatrix, MatchError> {
    similarity_matrix_blocked(src, tgt, DEFAULT_BLOCK_ROWS)
}

/// Same as [`similarity_matrix`] with an explicit block height. Each cell is
/// one sequential dot product, so the result does not depend on the blocking.
pub fn similarity_matrix_blocked(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    block_rows: usize,
) -> Result<SimilarityMatrix, MatchError> {
    if src.dim() != tgt.dim() {
        return Err(MatchError::DimensionMismatch {
            source_dim: src.dim(),
            target_dim: tgt.dim(),
        });
    }
    let (p, q) = (src.len(), tgt.len());
    let src_rows = src.rows().as_standard_layout();
    let tgt_rows = tgt.rows().as_standard_layout();
    let d = src.dim();
    let src_flat = src_rows.as_slice().expect("standard layout");
    let tgt_flat = tgt_rows.as_slice().expect("standard layout");

    let mut scores = vec![0.0; p * q];
    scores
        .par_chunks_mut(block_rows.max(1) * q.max(1))
        .enumerate()
        .for_each(|(block, out)| {
            let first = block * block_rows.max(1);
            for (offset, row_out) in out.chunks_mut(q.max(1)).enumerate() {
                let a = &src_flat[(first + offset) * d..(first + offset + 1) * d];
                for (j, cell) in row_out.iter_mut().enumerate() {
                    *cell = dot(a, &tgt_flat[j * d..(j + 1) * d]);
                }
            }
        });
    let scores = Array2::from_shape_vec((p, q), scores).expect("shape matches");
    SimilarityMatrix::new(scores, src.row_keys().to_vec(), tgt.row_keys().to_vec())
}

/// Indices of the `k` best entries of `values`: descending score, smaller index first on ties.
fn top_k_indices(values: impl Iterator<Item = f64>, k: usize) -> Vec<usize> {
    let mut indexed: Vec<(usize, f64)> = values.enumerate().collect();
    indexed.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    indexed.truncate(k);
    indexed.into_iter().map(|(i, _)| i).collect()
}

/// Pairs `(i, j)` where `j` is in row `i`'s top `k` and `i` is in column `j`'s top `k`.
pub fn mutual_topk(m: &SimilarityMatrix, k: usize) -> BTreeSet<(usize, usize)> {
    let (p, q) = m.dim();
    if k == 0 || p == 0 || q == 0 {
        return BTreeSet::new();
    }
    let row_tops: Vec<Vec<usize>> = (0..p)
        .into_par_iter()
        .map(|i| top_k_indices(m.scores.row(i).iter().copied(), k))
        .collect();
    let col_tops: Vec<BTreeSet<usize>> = (0..q)
        .into_par_iter()
        .map(|j| top_k_indices(m.scores.column(j).iter().copied(), k).into_iter().collect())
        .collect();
    row_tops
        .iter()
        .enumerate()
        .flat_map(|(i, tops)| tops.iter().map(move |&j| (i, j)))
        .filter(|(i, j)| col_tops[*j].contains(i))
        .collect()
}

/// All `p x q` cells.
pub fn all_pairs(m: &SimilarityMatrix) -> BTreeSet<(usize, usize)> {
    let (p, q) = m.dim();
    (0..p).flat_map(|i| (0..q).map(move |j| (i, j))).collect()
}

/// Optimal one-to-one matching restricted to `candidates`.
pub fn hungarian_assign(m: &SimilarityMatrix, candidates: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let scored: BTreeMap<(usize, usize), f64> = candidates.iter().map(|&(i, j)| ((i, j), m.get(i, j))).collect();
    hungarian::assign(&scored)
}

/// Keeps pairs scoring at least `theta` (inclusive).
pub fn threshold_filter(pairs: &BTreeSet<(usize, usize)>, m: &SimilarityMatrix, theta: f64) -> BTreeSet<(usize, usize)> {
    pairs.iter().copied().filter(|&(i, j)| m.get(i, j) >= theta).collect()
}

fn kind_of(inferred: &InferredOntology, iri: &Iri) -> EntityKind {
    inferred.base().entity(iri).map_or(EntityKind::Unknown, |e| e.kind)
}

/// Keeps pairs whose entity kinds are compatible; `Unknown` is compatible with everything.
pub fn type_filter(
    pairs: &BTreeSet<(usize, usize)>,
    m: &SimilarityMatrix,
    src_inf: &InferredOntology,
    tgt_inf: &InferredOntology,
) -> BTreeSet<(usize, usize)> {
    pairs
        .iter()
        .copied()
        .filter(|&(i, j)| {
            kind_of(src_inf, &m.source_keys[i]).compatible_with(kind_of(tgt_inf, &m.target_keys[j]))
        })
        .collect()
}

/// Settings for the approximate candidate path used on large inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnSettings {
    pub subspaces: usize,
    pub centroids: usize,
    pub seed: u64,
    /// Use the index only when `p * q` exceeds this many cells.
    pub threshold_cells: usize,
}

impl Default for AnnSettings {
    fn default() -> Self {
        Self {
            subspaces: 8,
            centroids: 256,
            seed: 0,
            threshold_cells: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatcherConfig {
    pub k: usize,
    pub theta: f64,
    pub enforce_types: bool,
    pub enforce_one_to_one: bool,
    /// When off, every cell is a candidate.
    pub mutual_topk: bool,
    pub ann: Option<AnnSettings>,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            k: 5,
            theta: 0.5,
            enforce_types: true,
            enforce_one_to_one: true,
            mutual_topk: true,
            ann: None,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if self.k == 0 {
            return Err(MatchError::InvalidConfig("k must be at least 1".into()));
        }
        if !(-1.0..=1.0).contains(&self.theta) {
            return Err(MatchError::InvalidConfig(format!("theta {} outside [-1, 1]", self.theta)));
        }
        if let Some(ann) = &self.ann {
            if ann.subspaces == 0 || ann.centroids == 0 {
                return Err(MatchError::InvalidConfig("ANN subspaces and centroids must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Equivalence,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        "="
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub source: Iri,
    pub target: Iri,
    pub confidence: f64,
    pub relation: Relation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSet {
    pub cells: Vec<Correspondence>,
}

impl AlignmentSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn pairs(&self) -> BTreeSet<(Iri, Iri)> {
        self.cells.iter().map(|c| (c.source.clone(), c.target.clone())).collect()
    }
}

/// Inputs for one side of an alignment.
#[derive(Debug, Clone, Copy)]
pub struct SideArtifacts<'a> {
    pub inferred: &'a InferredOntology,
    pub embeddings: &'a EmbeddingMatrix,
}

#[derive(Debug, Clone)]
pub struct AlignOutput {
    pub alignment: AlignmentSet,
    /// Dense matrix; `None` when candidates came from the approximate index.
    pub similarity: Option<SimilarityMatrix>,
    pub candidates: usize,
    pub assigned: usize,
    pub used_ann: bool,
}

pub fn align(src: SideArtifacts<'_>, tgt: SideArtifacts<'_>, config: &MatcherConfig) -> Result<AlignmentSet, MatchError> {
    align_detailed(src, tgt, config).map(|o| o.alignment)
}

/// Runs every stage and reports the intermediate sizes as well.
pub fn align_detailed(
    src: SideArtifacts<'_>,
    tgt: SideArtifacts<'_>,
    config: &MatcherConfig,
) -> Result<AlignOutput, MatchError> {
    config.validate()?;
    let (se, te) = (src.embeddings, tgt.embeddings);
    if se.dim() != te.dim() {
        return Err(MatchError::DimensionMismatch {
            source_dim: se.dim(),
            target_dim: te.dim(),
        });
    }
    let cells = se.len().saturating_mul(te.len());
    let ann = config.ann.as_ref().filter(|a| cells > a.threshold_cells);

    let (scored, similarity): (BTreeMap<(usize, usize), f64>, Option<SimilarityMatrix>) = match ann {
        Some(settings) => (ann_candidates(se, te, config, settings)?, None),
        None => {
            let m = similarity_matrix(se, te)?;
            let pairs = if config.mutual_topk { mutual_topk(&m, config.k) } else { all_pairs(&m) };
            let scored = pairs.into_iter().map(|(i, j)| ((i, j), m.get(i, j))).collect();
            (scored, Some(m))
        }
    };
    let candidates = scored.len();

    let chosen: BTreeSet<(usize, usize)> = if config.enforce_one_to_one {
        hungarian::assign(&scored)
    } else {
        scored.keys().copied().collect()
    };
    let assigned = chosen.len();

    let mut cells: Vec<Correspondence> = chosen
        .into_iter()
        .filter(|pair| scored[pair] >= config.theta)
        .filter(|&(i, j)| {
            !config.enforce_types
                || kind_of(src.inferred, &se.row_keys()[i]).compatible_with(kind_of(tgt.inferred, &te.row_keys()[j]))
        })
        .map(|(i, j)| Correspondence {
            source: se.row_keys()[i].clone(),
            target: te.row_keys()[j].clone(),
            confidence: scored[&(i, j)].clamp(0.0, 1.0),
            relation: Relation::Equivalence,
        })
        .collect();
    cells.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));

    Ok(AlignOutput {
        alignment: AlignmentSet { cells },
        similarity,
        candidates,
        assigned,
        used_ann: ann.is_some(),
    })
}

/// Candidate cells from product-quantized indexes on both sides, scored exactly.
fn ann_candidates(
    se: &EmbeddingMatrix,
    te: &EmbeddingMatrix,
    config: &MatcherConfig,
    settings: &AnnSettings,
) -> Result<BTreeMap<(usize, usize), f64>, MatchError> {
    let build = |m: &EmbeddingMatrix| -> Result<PqIndex, AnnError> {
        ann::build_pq(m, settings.subspaces, settings.centroids.min(m.len()), settings.seed)
    };
    let (src_index, tgt_index) = (build(se)?, build(te)?);
    let position = |keys: &[Iri]| -> BTreeMap<Iri, usize> {
        keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect()
    };
    let (src_pos, tgt_pos) = (position(se.row_keys()), position(te.row_keys()));
    let (src_pos, tgt_pos) = (&src_pos, &tgt_pos);

    let forward: BTreeSet<(usize, usize)> = (0..se.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let hits = ann::query_topk(&tgt_index, se.row(i).as_slice().expect("contiguous row"), config.k);
            hits.into_iter().map(move |(iri, _)| (i, tgt_pos[&iri])).collect::<Vec<_>>()
        })
        .collect();
    let backward: BTreeSet<(usize, usize)> = (0..te.len())
        .into_par_iter()
        .flat_map_iter(|j| {
            let hits = ann::query_topk(&src_index, te.row(j).as_slice().expect("contiguous row"), config.k);
            hits.into_iter().map(move |(iri, _)| (src_pos[&iri], j)).collect::<Vec<_>>()
        })
        .collect();
    let pairs: BTreeSet<(usize, usize)> = if config.mutual_topk {
        forward.intersection(&backward).copied().collect()
    } else {
        forward.union(&backward).copied().collect()
    };
    Ok(pairs
        .into_iter()
        .map(|(i, j)| {
            let s = dot(
                se.row(i).as_slice().expect("contiguous row"),
                te.row(j).as_slice().expect("contiguous row"),
            );
            ((i, j), s)
        })
        .collect())
}
