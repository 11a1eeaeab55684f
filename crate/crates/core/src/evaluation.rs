//! Scoring against gold alignments and ablation sweeps.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;
use std::str::FromStr;

use log::warn;
use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::alignment::{read_cells, AlignmentFormatError};
use crate::embedding::EmbeddingMatrix;
use crate::matcher::{dot, AlignmentSet, SimilarityMatrix};
use crate::ontology::Iri;
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineRun};
use crate::reasoner::InferredOntology;
use crate::verbalizer::Template;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("gold alignment is empty")]
    EmptyGold,
    #[error("malformed alignment: {0}")]
    MalformedAlignment(String),
    #[error("gold source {0} is not among the scored entities")]
    MissingEntity(Iri),
    #[error("unknown ablation arm {0:?}; expected one of {list}", list = AblationArm::names())]
    UnknownArm(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("arm {arm}: {error}")]
    Pipeline {
        arm: &'static str,
        #[source]
        error: PipelineError,
    },
}

impl From<AlignmentFormatError> for EvalError {
    fn from(e: AlignmentFormatError) -> Self {
        match e {
            AlignmentFormatError::Malformed(d) => EvalError::MalformedAlignment(d),
            AlignmentFormatError::Io(d) => EvalError::Io(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldFormat {
    AlignmentXml,
    Tsv,
}

impl GoldFormat {
    /// `.tsv` and `.txt` are tab-separated; anything else is Alignment Format XML.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("tsv" | "txt") => GoldFormat::Tsv,
            _ => GoldFormat::AlignmentXml,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldAlignment {
    pairs: BTreeSet<(Iri, Iri)>,
}

impl GoldAlignment {
    pub fn new(pairs: impl IntoIterator<Item = (Iri, Iri)>) -> Self {
        Self {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn pairs(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGold {
    pub gold: GoldAlignment,
    /// Skipped cells and duplicates, also sent to the log.
    pub warnings: Vec<String>,
}

fn parse_iri(raw: &str, at: &str) -> Result<Iri, EvalError> {
    Iri::new(raw.trim()).map_err(|e| EvalError::MalformedAlignment(format!("{at}: {e}")))
}

pub fn load_gold(source: impl BufRead, format: GoldFormat) -> Result<LoadedGold, EvalError> {
    let mut pairs = BTreeSet::new();
    let mut warnings = Vec::new();
    match format {
        GoldFormat::AlignmentXml => {
            for (n, cell) in read_cells(source)?.into_iter().enumerate() {
                let at = format!("cell {}", n + 1);
                if cell.relation != "=" {
                    warnings.push(format!("{at}: skipping relation {:?}", cell.relation));
                    continue;
                }
                let pair = (parse_iri(&cell.entity1, &at)?, parse_iri(&cell.entity2, &at)?);
                if !pairs.insert(pair) {
                    warnings.push(format!("{at}: duplicate pair"));
                }
            }
        }
        GoldFormat::Tsv => {
            for (n, line) in source.lines().enumerate() {
                let line = line.map_err(|e| EvalError::Io(e.to_string()))?;
                let at = format!("line {}", n + 1);
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() < 2 {
                    return Err(EvalError::MalformedAlignment(format!("{at}: expected two tab-separated IRIs")));
                }
                let pair = (parse_iri(fields[0], &at)?, parse_iri(fields[1], &at)?);
                if !pairs.insert(pair) {
                    warnings.push(format!("{at}: duplicate pair"));
                }
            }
        }
    }
    for w in &warnings {
        warn!("gold alignment {w}");
    }
    Ok(LoadedGold {
        gold: GoldAlignment { pairs },
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RankedMetrics {
    pub precision_at_1: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
    #[serde(flatten)]
    pub ranked: Option<RankedMetrics>,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl Metrics {
    pub fn from_counts(counts: Counts) -> Self {
        let predicted = counts.true_pos + counts.false_pos;
        let gold = counts.true_pos + counts.false_neg;
        let precision = if predicted == 0 { 0.0 } else { counts.true_pos as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { counts.true_pos as f64 / gold as f64 };
        Metrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            counts,
            ranked: None,
        }
    }
}

/// Set precision, recall and F1 of the predicted pairs.
pub fn score(predicted: &AlignmentSet, gold: &GoldAlignment) -> Result<Metrics, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let predicted = predicted.pairs();
    let true_pos = predicted.intersection(&gold.pairs).count();
    Ok(Metrics::from_counts(Counts {
        true_pos,
        false_pos: predicted.len() - true_pos,
        false_neg: gold.len() - true_pos,
    }))
}

/// 1-based rank of each gold target in its source row, in gold order.
/// Ties are broken by target IRI; a target absent from the matrix gets `None`.
pub fn gold_ranks(m: &SimilarityMatrix, gold: &GoldAlignment) -> Result<Vec<Option<usize>>, EvalError> {
    gold.pairs
        .iter()
        .map(|(s, t)| {
            let i = m
                .source_keys()
                .iter()
                .position(|k| k == s)
                .ok_or_else(|| EvalError::MissingEntity(s.clone()))?;
            let Some(j) = m.target_keys().iter().position(|k| k == t) else {
                return Ok(None);
            };
            let target_score = m.get(i, j);
            let ahead = (0..m.dim().1)
                .filter(|&c| {
                    let v = m.get(i, c);
                    v > target_score || (v == target_score && m.target_keys()[c] < *t)
                })
                .count();
            Ok(Some(ahead + 1))
        })
        .collect()
}

pub fn score_ranked(m: &SimilarityMatrix, gold: &GoldAlignment) -> Result<RankedMetrics, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let ranks = gold_ranks(m, gold)?;
    let n = ranks.len() as f64;
    let mrr = ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / n;
    let precision_at_1 = ranks.iter().filter(|r| **r == Some(1)).count() as f64 / n;
    Ok(RankedMetrics { precision_at_1, mrr })
}

/// Exact similarity rows for the gold sources only.
pub fn gold_rows(source: &EmbeddingMatrix, target: &EmbeddingMatrix, gold: &GoldAlignment) -> Result<SimilarityMatrix, EvalError> {
    let sources: BTreeSet<&Iri> = gold.pairs.iter().map(|(s, _)| s).collect();
    let mut rows = Vec::with_capacity(sources.len());
    for s in &sources {
        let i = source
            .row_keys()
            .iter()
            .position(|k| k == *s)
            .ok_or_else(|| EvalError::MissingEntity((*s).clone()))?;
        rows.push(i);
    }
    let target_rows = target.rows().as_standard_layout();
    let scores = Array2::from_shape_fn((rows.len(), target.len()), |(r, j)| {
        let a = source.row(rows[r]);
        dot(
            a.as_slice().expect("contiguous row"),
            target_rows.row(j).as_slice().expect("contiguous row"),
        )
    });
    let keys = sources.into_iter().cloned().collect();
    Ok(SimilarityMatrix::new(scores, keys, target.row_keys().to_vec()).expect("shapes agree"))
}

/// Set metrics on the alignment plus ranked metrics on the raw scores.
pub fn evaluate(run: &PipelineRun, gold: &GoldAlignment) -> Result<Metrics, EvalError> {
    let mut metrics = score(&run.alignment, gold)?;
    let ranked = match &run.similarity {
        Some(m) => score_ranked(m, gold)?,
        None => score_ranked(&gold_rows(&run.source_embeddings, &run.target_embeddings, gold)?, gold)?,
    };
    metrics.ranked = Some(ranked);
    Ok(metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationArm {
    Full,
    NoVerbalization,
    NoTypeConstraints,
    NoMutualTopk,
    NoOneToOne,
    NoReasonerContext,
}

impl AblationArm {
    pub const ALL: [AblationArm; 6] = [
        AblationArm::Full,
        AblationArm::NoVerbalization,
        AblationArm::NoTypeConstraints,
        AblationArm::NoMutualTopk,
        AblationArm::NoOneToOne,
        AblationArm::NoReasonerContext,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationArm::Full => "full",
            AblationArm::NoVerbalization => "no_verbalization",
            AblationArm::NoTypeConstraints => "no_type_constraints",
            AblationArm::NoMutualTopk => "no_mutual_topk",
            AblationArm::NoOneToOne => "no_one_to_one",
            AblationArm::NoReasonerContext => "no_reasoner_context",
        }
    }

    fn names() -> String {
        Self::ALL.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
    }

    /// The base configuration with this arm's component switched off.
    pub fn apply(self, base: &PipelineConfig) -> PipelineConfig {
        let mut c = base.clone();
        match self {
            AblationArm::Full => {}
            AblationArm::NoVerbalization => c.verbalizer.template = Template::LabelOnly,
            AblationArm::NoTypeConstraints => c.matcher.enforce_types = false,
            AblationArm::NoMutualTopk => c.matcher.mutual_topk = false,
            AblationArm::NoOneToOne => c.matcher.enforce_one_to_one = false,
            AblationArm::NoReasonerContext => c.verbalizer.use_inferred_context = false,
        }
        c
    }
}

impl FromStr for AblationArm {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| EvalError::UnknownArm(s.trim().to_string()))
    }
}

/// Parses a comma-separated arm list, rejecting unknown names and duplicates.
pub fn parse_arms(list: &str) -> Result<Vec<AblationArm>, EvalError> {
    let mut seen = BTreeSet::new();
    let mut arms = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let arm: AblationArm = part.parse()?;
        if seen.insert(arm) {
            arms.push(arm);
        }
    }
    if arms.is_empty() {
        return Err(EvalError::UnknownArm(list.to_string()));
    }
    Ok(arms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub arm: AblationArm,
    pub predicted: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// One isolated pipeline run per arm, in parallel; rows come back in `arms` order.
pub fn run_ablation(
    source: &InferredOntology,
    target: &InferredOntology,
    config: &PipelineConfig,
    arms: &[AblationArm],
    gold: &GoldAlignment,
) -> Result<Vec<AblationRow>, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    arms.par_iter()
        .map(|&arm| {
            let run = run_pipeline(source, target, &arm.apply(config))
                .map_err(|error| EvalError::Pipeline { arm: arm.name(), error })?;
            Ok(AblationRow {
                arm,
                predicted: run.alignment.len(),
                metrics: evaluate(&run, gold)?,
            })
        })
        .collect()
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>9} {:>9} {:>9} {:>9} {:>9} {:>6}",
        "arm", "precision", "recall", "f1", "p@1", "mrr", "pred"
    );
    for row in rows {
        let m = &row.metrics;
        let (p1, mrr) = m.ranked.map_or((f64::NAN, f64::NAN), |r| (r.precision_at_1, r.mrr));
        let _ = writeln!(
            out,
            "{:<20} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>6}",
            row.arm.name(),
            m.precision,
            m.recall,
            m.f1,
            p1,
            mrr,
            row.predicted
        );
    }
    out
}
