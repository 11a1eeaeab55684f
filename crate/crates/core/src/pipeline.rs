//! Verbalize, embed and align two closed ontologies.

use std::time::{Duration, Instant};

use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::embedding::{EmbeddingError, EmbeddingMatrix, ProviderConfig};
use crate::matcher::{align_detailed, AlignmentSet, MatchError, MatcherConfig, SideArtifacts, SimilarityMatrix};
use crate::reasoner::InferredOntology;
use crate::verbalizer::{verbalize_all, Verbalization, VerbalizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("{side} ontology has no entities to align")]
    NothingToAlign { side: Side },
    #[error("embedding {side} descriptions: {error}")]
    Embedding {
        side: Side,
        #[source]
        error: EmbeddingError,
    },
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub source_languages: Vec<String>,
    pub target_languages: Vec<String>,
    pub provider: ProviderConfig,
    pub matcher: MatcherConfig,
    pub verbalizer: VerbalizerConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub alignment: AlignmentSet,
    pub similarity: Option<SimilarityMatrix>,
    pub source_embeddings: EmbeddingMatrix,
    pub target_embeddings: EmbeddingMatrix,
    pub source_verbalizations: Vec<Verbalization>,
    pub target_verbalizations: Vec<Verbalization>,
    pub candidates: usize,
    pub assigned: usize,
    pub used_ann: bool,
    pub timings: Vec<StageTiming>,
}

fn timed<T>(timings: &mut Vec<StageTiming>, stage: &'static str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    let elapsed: Duration = start.elapsed();
    info!("{stage}: {:.3}s", elapsed.as_secs_f64());
    timings.push(StageTiming {
        stage,
        seconds: elapsed.as_secs_f64(),
    });
    out
}

/// Anonymous (skolemized) entities are never aligned.
fn describe(inferred: &InferredOntology, languages: &[String], config: &VerbalizerConfig) -> Vec<Verbalization> {
    verbalize_all(inferred, languages, config)
        .into_iter()
        .filter(|v| !v.entity.is_skolem())
        .collect()
}

fn embed(side: Side, verbalizations: &[Verbalization], provider: &ProviderConfig) -> Result<EmbeddingMatrix, PipelineError> {
    if verbalizations.is_empty() {
        return Err(PipelineError::NothingToAlign { side });
    }
    let texts: Vec<_> = verbalizations.iter().map(|v| (v.entity.clone(), v.text.clone())).collect();
    provider
        .build()
        .and_then(|p| p.embed(&texts))
        .map_err(|error| PipelineError::Embedding { side, error })
}

pub fn run_pipeline(
    source: &InferredOntology,
    target: &InferredOntology,
    config: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    config.matcher.validate()?;
    let mut timings = Vec::new();
    let (source_verbalizations, target_verbalizations) = timed(&mut timings, "verbalize", || {
        rayon::join(
            || describe(source, &config.source_languages, &config.verbalizer),
            || describe(target, &config.target_languages, &config.verbalizer),
        )
    });
    info!(
        "verbalized {} source and {} target entities",
        source_verbalizations.len(),
        target_verbalizations.len()
    );
    let source_embeddings = timed(&mut timings, "embed source", || {
        embed(Side::Source, &source_verbalizations, &config.provider)
    })?;
    let target_embeddings = timed(&mut timings, "embed target", || {
        embed(Side::Target, &target_verbalizations, &config.provider)
    })?;
    let out = timed(&mut timings, "align", || {
        align_detailed(
            SideArtifacts {
                inferred: source,
                embeddings: &source_embeddings,
            },
            SideArtifacts {
                inferred: target,
                embeddings: &target_embeddings,
            },
            &config.matcher,
        )
    })?;
    info!(
        "{} candidates, {} assigned, {} correspondences{}",
        out.candidates,
        out.assigned,
        out.alignment.len(),
        if out.used_ann { " (approximate candidates)" } else { "" }
    );
    Ok(PipelineRun {
        alignment: out.alignment,
        similarity: out.similarity,
        source_embeddings,
        target_embeddings,
        source_verbalizations,
        target_verbalizations,
        candidates: out.candidates,
        assigned: out.assigned,
        used_ann: out.used_ann,
        timings,
    })
}
