//! Run configuration: defaults, then the TOML file, then the endpoint
//! environment variable, then command-line flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, ValueEnum};
use polyalign::embedding::{ProviderConfig, RemoteConfig, ENDPOINT_ENV};
use polyalign::evaluation::{parse_arms, AblationArm, GoldFormat};
use polyalign::matcher::{AnnSettings, MatcherConfig};
use polyalign::ontology::RdfFormat;
use polyalign::pipeline::PipelineConfig;
use polyalign::verbalizer::{Template, VerbalizerConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Turtle,
    Ntriples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Hash,
    File,
    Remote,
}

/// Align two ontologies written in different languages.
#[derive(Debug, Default, Parser)]
#[command(name = "polyalign", version)]
pub struct Args {
    /// Source ontology (Turtle or N-Triples)
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Target ontology
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Input syntax [default: from the file extension, `.nt` is N-Triples]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Preferred label languages for the source, comma-separated, most preferred first [default: en]
    #[arg(long, value_delimiter = ',')]
    pub src_lang: Option<Vec<String>>,
    /// Preferred label languages for the target [default: en]
    #[arg(long, value_delimiter = ',')]
    pub tgt_lang: Option<Vec<String>>,
    /// Embedding provider [default: hash]
    #[arg(long, value_enum)]
    pub provider: Option<ProviderKind>,
    /// Dimension of the hash provider [default: 256]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Vector file for the file provider
    #[arg(long)]
    pub vectors_file: Option<PathBuf>,
    /// Base URL of the remote embedding service; overrides $POLYALIGN_EMBED_ENDPOINT
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Mutual top-k candidates per entity [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// Minimum similarity for an emitted correspondence [default: 0.5]
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Embed bare labels instead of contextual sentences
    #[arg(long)]
    pub no_verbalization: bool,
    /// Allow correspondences between incompatible entity kinds
    #[arg(long)]
    pub no_type_filter: bool,
    /// Skip the mutual top-k candidate filter
    #[arg(long)]
    pub no_mutual_topk: bool,
    /// Keep every candidate above threshold instead of a one-to-one assignment
    #[arg(long)]
    pub no_one_to_one: bool,
    /// Use product-quantized search when the score matrix exceeds the size threshold
    #[arg(long)]
    pub ann: bool,
    /// Alignment output file [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reference alignment (alignment XML, or TSV for `.tsv`/`.txt`)
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Metrics output, one JSON object per line [default: <out>.metrics.jsonl when --out is set]
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Comma-separated ablation arms to evaluate against --gold
    #[arg(long)]
    pub ablation: Option<String>,
    /// Seed for index training [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parse inputs and validate the configuration, then stop
    #[arg(long)]
    pub dry_run: bool,
    /// TOML configuration file; flags take precedence over it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    source: Option<PathBuf>,
    target: Option<PathBuf>,
    format: Option<Format>,
    source_languages: Option<Vec<String>>,
    target_languages: Option<Vec<String>>,
    out: Option<PathBuf>,
    gold: Option<PathBuf>,
    metrics: Option<PathBuf>,
    ablation: Option<Vec<String>>,
    seed: Option<u64>,
    #[serde(default)]
    provider: FileProvider,
    #[serde(default)]
    matcher: FileMatcher,
    #[serde(default)]
    verbalizer: FileVerbalizer,
    #[serde(default)]
    ann: FileAnn,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileProvider {
    kind: Option<ProviderKind>,
    dim: Option<usize>,
    vectors_file: Option<PathBuf>,
    endpoint: Option<String>,
    batch_size: Option<usize>,
    max_in_flight: Option<usize>,
    timeout_secs: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileMatcher {
    k: Option<usize>,
    theta: Option<f64>,
    type_filter: Option<bool>,
    mutual_topk: Option<bool>,
    one_to_one: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileVerbalizer {
    label_only: Option<bool>,
    inferred_context: Option<bool>,
    short_label_threshold: Option<usize>,
    max_siblings: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileAnn {
    enabled: Option<bool>,
    subspaces: Option<usize>,
    centroids: Option<usize>,
    threshold_cells: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: PathBuf,
    pub target: PathBuf,
    pub source_format: RdfFormat,
    pub target_format: RdfFormat,
    pub pipeline: PipelineConfig,
    pub out: Option<PathBuf>,
    pub gold: Option<(PathBuf, GoldFormat)>,
    pub metrics: Option<PathBuf>,
    pub ablation: Option<Vec<AblationArm>>,
    pub seed: u64,
    pub dry_run: bool,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    // Paths in the file are relative to the file.
    let base = path.parent().unwrap_or(Path::new("."));
    for p in [
        &mut cfg.source,
        &mut cfg.target,
        &mut cfg.out,
        &mut cfg.gold,
        &mut cfg.metrics,
        &mut cfg.provider.vectors_file,
    ]
    .into_iter()
    .flatten()
    {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

fn languages(list: Vec<String>) -> Result<Vec<String>, CliError> {
    let list: Vec<String> = list.into_iter().map(|l| l.trim().to_ascii_lowercase()).filter(|l| !l.is_empty()).collect();
    if list.is_empty() {
        return Err(config_error("language list is empty"));
    }
    Ok(list)
}

fn input_format(explicit: Option<Format>, path: &Path) -> RdfFormat {
    match explicit {
        Some(Format::Turtle) => RdfFormat::Turtle,
        Some(Format::Ntriples) => RdfFormat::NTriples,
        None => RdfFormat::from_path(path),
    }
}

fn existing(path: Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    let path = path.ok_or_else(|| config_error(format!("no {what} given")))?;
    if !path.is_file() {
        return Err(config_error(format!("{what} {} does not exist", path.display())));
    }
    Ok(path)
}

impl RunConfig {
    /// `env_endpoint` is the value of the endpoint environment variable, if set.
    pub fn resolve(args: Args, env_endpoint: Option<String>) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };

        let source = existing(args.source.or(file.source), "source ontology")?;
        let target = existing(args.target.or(file.target), "target ontology")?;
        let format = args.format.or(file.format);

        let endpoint = args.endpoint.or(env_endpoint).or(file.provider.endpoint);
        let provider = match args.provider.or(file.provider.kind).unwrap_or(ProviderKind::Hash) {
            ProviderKind::Hash => ProviderConfig::HashTest {
                dimension: args.dim.or(file.provider.dim).unwrap_or(256),
            },
            ProviderKind::File => ProviderConfig::FileVectors {
                path: existing(args.vectors_file.or(file.provider.vectors_file), "vectors file")?,
            },
            ProviderKind::Remote => {
                let endpoint =
                    endpoint.ok_or_else(|| config_error(format!("remote provider needs --endpoint or ${ENDPOINT_ENV}")))?;
                let mut remote = RemoteConfig::new(endpoint);
                if let Some(b) = file.provider.batch_size {
                    remote.batch_size = b;
                }
                if let Some(n) = file.provider.max_in_flight {
                    remote.max_in_flight = n;
                }
                if let Some(t) = file.provider.timeout_secs {
                    remote.timeout =
                        Duration::try_from_secs_f64(t).map_err(|_| config_error(format!("bad timeout_secs {t}")))?;
                }
                ProviderConfig::RemoteService(remote)
            }
        };
        provider.validate().map_err(|e| config_error(e.to_string()))?;

        let seed = args.seed.or(file.seed).unwrap_or(0);
        let ann_enabled = args.ann || file.ann.enabled.unwrap_or(false);
        let defaults = AnnSettings::default();
        let matcher = MatcherConfig {
            k: args.k.or(file.matcher.k).unwrap_or(5),
            theta: args.theta.or(file.matcher.theta).unwrap_or(0.5),
            enforce_types: !args.no_type_filter && file.matcher.type_filter.unwrap_or(true),
            mutual_topk: !args.no_mutual_topk && file.matcher.mutual_topk.unwrap_or(true),
            enforce_one_to_one: !args.no_one_to_one && file.matcher.one_to_one.unwrap_or(true),
            ann: ann_enabled.then(|| AnnSettings {
                subspaces: file.ann.subspaces.unwrap_or(defaults.subspaces),
                centroids: file.ann.centroids.unwrap_or(defaults.centroids),
                threshold_cells: file.ann.threshold_cells.unwrap_or(defaults.threshold_cells),
                seed,
            }),
        };
        matcher.validate().map_err(|e| config_error(e.to_string()))?;

        let mut verbalizer = VerbalizerConfig::default();
        if args.no_verbalization || file.verbalizer.label_only.unwrap_or(false) {
            verbalizer.template = Template::LabelOnly;
        }
        if let Some(b) = file.verbalizer.inferred_context {
            verbalizer.use_inferred_context = b;
        }
        if let Some(n) = file.verbalizer.short_label_threshold {
            verbalizer.short_label_threshold = n;
        }
        if let Some(n) = file.verbalizer.max_siblings {
            verbalizer.max_siblings = n;
        }

        let gold = args.gold.or(file.gold).map(|p| existing(Some(p), "gold alignment")).transpose()?;
        let ablation = match (args.ablation, file.ablation) {
            (Some(list), _) => Some(list),
            (None, Some(list)) => Some(list.join(",")),
            (None, None) => None,
        }
        .map(|list| parse_arms(&list).map_err(|e| config_error(e.to_string())))
        .transpose()?;
        if ablation.is_some() && gold.is_none() {
            return Err(config_error("--ablation needs --gold"));
        }
        let out = args.out.or(file.out);
        let metrics = args
            .metrics
            .or(file.metrics)
            .or_else(|| gold.as_ref().and(out.as_ref()).map(|o| o.with_extension("metrics.jsonl")));

        Ok(RunConfig {
            source_format: input_format(format, &source),
            target_format: input_format(format, &target),
            source,
            target,
            pipeline: PipelineConfig {
                source_languages: languages(args.src_lang.or(file.source_languages).unwrap_or(vec!["en".into()]))?,
                target_languages: languages(args.tgt_lang.or(file.target_languages).unwrap_or(vec!["en".into()]))?,
                provider,
                matcher,
                verbalizer,
            },
            out,
            gold: gold.map(|p| {
                let f = GoldFormat::from_path(&p);
                (p, f)
            }),
            metrics,
            ablation,
            seed,
            dry_run: args.dry_run,
        })
    }
}
