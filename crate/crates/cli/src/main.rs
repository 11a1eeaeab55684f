mod config;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use log::{info, warn};
use polyalign::alignment::write_alignment;
use polyalign::embedding::ENDPOINT_ENV;
use polyalign::evaluation::{
    ablation_table, evaluate, load_gold, run_ablation, AblationRow, EvalError, GoldAlignment, Metrics,
};
use polyalign::ontology::{parse_ontology, ParseError, RdfFormat};
use polyalign::pipeline::{run_pipeline, PipelineError};
use polyalign::reasoner::{compute_closure, InferredOntology};
use serde::Serialize;
use thiserror::Error;

use config::{Args, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("parse {path}: {error}")]
    Parse { path: PathBuf, error: String },
    #[error("embedding: {0}")]
    Provider(String),
    #[error("matching: {0}")]
    Matching(String),
    #[error("I/O: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Parse { .. } => 3,
            CliError::Provider(_) => 4,
            CliError::Matching(_) => 5,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Embedding { .. } => CliError::Provider(e.to_string()),
            _ => CliError::Matching(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Pipeline { error, arm } => match CliError::from(error) {
                CliError::Provider(m) => CliError::Provider(format!("arm {arm}: {m}")),
                other => CliError::Matching(format!("arm {arm}: {other}")),
            },
            EvalError::Io(m) => CliError::Io(m),
            other => CliError::Matching(other.to_string()),
        }
    }
}

fn load_ontology(path: &Path, format: RdfFormat) -> Result<InferredOntology, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let parsed = parse_ontology(BufReader::new(file), format).map_err(|error| match error {
        ParseError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        error => CliError::Parse {
            path: path.to_path_buf(),
            error: error.to_string(),
        },
    })?;
    let ignored = parsed.report.ignored_total();
    if ignored > 0 {
        info!("{}: {ignored} triples outside the supported vocabulary were ignored", path.display());
    }
    let inferred = compute_closure(&parsed.ontology);
    info!(
        "{}: {} entities, {} collapsed cycles",
        path.display(),
        parsed.ontology.entities().len(),
        inferred.collapsed_cycles()
    );
    Ok(inferred)
}

fn load_gold_file(path: &Path, format: polyalign::evaluation::GoldFormat) -> Result<GoldAlignment, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let loaded = load_gold(BufReader::new(file), format).map_err(|e| match e {
        EvalError::Io(m) => CliError::Io(m),
        e => CliError::Parse {
            path: path.to_path_buf(),
            error: e.to_string(),
        },
    })?;
    for w in &loaded.warnings {
        warn!("{}: {w}", path.display());
    }
    if loaded.gold.is_empty() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            error: "no equivalence correspondences".into(),
        });
    }
    Ok(loaded.gold)
}

/// Writes through a temporary file in the destination directory so readers
/// never see a partial file.
fn write_atomically(path: &Path, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    write(tmp.as_file_mut()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct MetricsLine<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    arm: Option<&'a str>,
    predicted: usize,
    #[serde(flatten)]
    metrics: &'a Metrics,
}

fn metric_lines(rows: &[(Option<&str>, usize, &Metrics)]) -> String {
    rows.iter()
        .map(|&(arm, predicted, metrics)| {
            let line = MetricsLine { arm, predicted, metrics };
            serde_json::to_string(&line).expect("metrics serialize") + "\n"
        })
        .collect()
}

fn run(config: RunConfig) -> Result<(), CliError> {
    info!("seed {}", config.seed);
    let start = Instant::now();
    let (source, target) = (
        load_ontology(&config.source, config.source_format)?,
        load_ontology(&config.target, config.target_format)?,
    );
    let gold = config.gold.as_ref().map(|(p, f)| load_gold_file(p, *f)).transpose()?;
    info!("parse and closure: {:.3}s", start.elapsed().as_secs_f64());
    if config.dry_run {
        eprintln!("dry run: configuration and inputs are valid");
        return Ok(());
    }

    let pipeline = run_pipeline(&source, &target, &config.pipeline)?;
    info!(
        "{} candidates, {} assigned, {} emitted{}",
        pipeline.candidates,
        pipeline.assigned,
        pipeline.alignment.len(),
        if pipeline.used_ann { " (approximate search)" } else { "" }
    );
    match &config.out {
        Some(path) => write_atomically(path, |w| write_alignment(&pipeline.alignment, w))?,
        None => {
            let mut out = io::stdout().lock();
            write_alignment(&pipeline.alignment, &mut out)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
    }

    let Some(gold) = gold else {
        return Ok(());
    };
    let (lines, table) = match &config.ablation {
        Some(arms) => {
            let rows: Vec<AblationRow> = run_ablation(&source, &target, &config.pipeline, arms, &gold)?;
            let view: Vec<_> = rows.iter().map(|r| (Some(r.arm.name()), r.predicted, &r.metrics)).collect();
            (metric_lines(&view), ablation_table(&rows))
        }
        None => {
            let m = evaluate(&pipeline, &gold)?;
            let r = m.ranked.unwrap_or_default();
            let table = format!(
                "precision {:.4}  recall {:.4}  f1 {:.4}  p@1 {:.4}  mrr {:.4}  predicted {}\n",
                m.precision,
                m.recall,
                m.f1,
                r.precision_at_1,
                r.mrr,
                pipeline.alignment.len()
            );
            (metric_lines(&[(None, pipeline.alignment.len(), &m)]), table)
        }
    };
    if let Some(path) = &config.metrics {
        write_atomically(path, |w| w.write_all(lines.as_bytes()))?;
    }
    // stdout may already carry the alignment.
    if config.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = RunConfig::resolve(args, std::env::var(ENDPOINT_ENV).ok()).and_then(run);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
