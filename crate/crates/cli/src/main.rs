mod commands;
mod config;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use metacom::classifiers::{ClassifierKind, ClassifierParams};
use metacom::eval::Target;
use metacom::features::{FeatureConfig, SelectK};
use metacom::sampling::MergePolicy;

use crate::config::RunConfig;
use crate::manifest::Manifest;

#[derive(Debug, Parser)]
#[command(name = "metacom", version, about = "Detect and classify meta-comments in news comment sections")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every subsystem derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for folds, grid points and forest trees.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a comments file, optionally merge coder annotations, and write it back normalized.
    Ingest(IngestArgs),
    /// Print dataset statistics.
    Stats(InputArgs),
    /// Train word and document embeddings on a comment corpus.
    TrainEmbeddings(InputArgs),
    /// Nearest neighbours of words in an embedding model.
    Neighbors(NeighborsArgs),
    /// Extend the keyword lists with embedding neighbours.
    EnrichKeywords(EnrichArgs),
    /// Write the feature matrix of a dataset.
    Features(ModelArgs),
    /// Fit the two-step meta/addressee classifier.
    Train(ModelArgs),
    /// Cross-validate every grid combination.
    GridSearch(GridArgs),
    /// Stratified k-fold evaluation per target.
    Evaluate(EvaluateArgs),
    /// Train on one dataset and test on another.
    CrossEval(CrossEvalArgs),
    /// Apply a trained two-step model.
    Classify(ClassifyArgs),
    /// Top single features by ANOVA F-value for each target.
    RankFeatures(RankArgs),
    /// Build annotation batches by pattern, similarity and random sampling.
    Sample(SampleArgs),
    /// Render metrics files as summary tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Comments file (JSON lines).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Coded annotation batch (CSV); repeat for several coders.
    #[arg(long)]
    coded: Vec<PathBuf>,
    /// How to resolve disagreements: majority or strict.
    #[arg(long, default_value = "majority")]
    policy: MergePolicy,
}

#[derive(Debug, Args)]
struct EmbeddingArgs {
    /// Embedding directory written by `train-embeddings`.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NeighborsArgs {
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Query word; repeatable.
    #[arg(long = "word", required = true)]
    words: Vec<String>,
    /// Neighbours listed per word.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Args)]
struct EnrichArgs {
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Neighbours added per seed keyword.
    #[arg(long)]
    top_n: Option<usize>,
    /// Minimum cosine similarity of an added neighbour.
    #[arg(long)]
    min_sim: Option<f64>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Feature preset: all, without-regex, only-regex, only-semantic, only-text.
    #[arg(long)]
    features: Option<String>,
    /// Classifier kind with default hyperparameters.
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    /// Penalty of the linear SVM.
    #[arg(long)]
    c: Option<f64>,
    /// Features kept by ANOVA selection: a count or "all".
    #[arg(long)]
    select: Option<SelectK>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Confidence an addressee must exceed.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Target the grid is scored on.
    #[arg(long, default_value = "Meta")]
    target: Target,
    /// Number of stratified folds.
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Targets to evaluate; all four by default.
    #[arg(long = "target")]
    targets: Vec<Target>,
    /// Number of stratified folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Evaluate the convolutional network instead of the feature pipeline.
    #[arg(long)]
    cnn: bool,
}

#[derive(Debug, Args)]
struct CrossEvalArgs {
    /// Training comments file.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Test comments file.
    #[arg(long)]
    test: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Targets to evaluate; all four by default.
    #[arg(long = "target")]
    targets: Vec<Target>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Model directory written by `train`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Confidence an addressee must exceed.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Features listed per target.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Comments sampled per class and sampling method.
    #[arg(long)]
    per_class: Option<usize>,
    /// Comments sampled uniformly at random.
    #[arg(long)]
    random: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Metrics files written by `evaluate` or `cross-eval`.
    #[arg(required = true)]
    metrics: Vec<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, value: &Option<PathBuf>) {
    if value.is_some() {
        slot.clone_from(value);
    }
}

impl PipelineArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        set_path(&mut cfg.data.embeddings, &self.embeddings.embeddings);
        if let Some(name) = &self.features {
            cfg.features = FeatureConfig::preset(name)
                .with_context(|| format!("unknown feature preset {name:?}; expected one of {:?}", FeatureConfig::PRESETS))?;
        }
        if let Some(kind) = self.classifier {
            cfg.classifier = ClassifierParams::default_for(kind);
        }
        if let Some(c) = self.c {
            match &mut cfg.classifier {
                ClassifierParams::LinearSvm(p) => p.c = c,
                other => anyhow::bail!("--c applies to the linear SVM, not {}", other.kind().as_str()),
            }
        }
        set(&mut cfg.select, self.select);
        Ok(())
    }
}

/// Folds flags into the configuration and returns the command name.
fn apply_flags(cli: &Cli, cfg: &mut RunConfig) -> Result<&'static str> {
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.jobs, cli.jobs);
    if let Some(o) = &cli.out {
        cfg.output_dir.clone_from(o);
    }
    let d = &mut cfg.data;
    let name = match &cli.command {
        Command::Ingest(a) => {
            set_path(&mut d.input, &a.input.input);
            "ingest"
        }
        Command::Stats(a) => {
            set_path(&mut d.input, &a.input);
            "stats"
        }
        Command::TrainEmbeddings(a) => {
            set_path(&mut d.input, &a.input);
            "train-embeddings"
        }
        Command::Neighbors(a) => {
            set_path(&mut d.embeddings, &a.embeddings.embeddings);
            "neighbors"
        }
        Command::EnrichKeywords(a) => {
            set_path(&mut d.embeddings, &a.embeddings.embeddings);
            set(&mut cfg.sample.enrich_top_n, a.top_n);
            set(&mut cfg.sample.enrich_min_sim, a.min_sim);
            "enrich-keywords"
        }
        Command::Features(a) | Command::Train(a) => {
            set_path(&mut d.input, &a.input.input);
            a.pipeline.apply(cfg)?;
            set(&mut cfg.eval.threshold, a.threshold);
            if matches!(cli.command, Command::Features(_)) {
                "features"
            } else {
                "train"
            }
        }
        Command::GridSearch(a) => {
            set_path(&mut d.input, &a.input.input);
            a.pipeline.apply(cfg)?;
            set(&mut cfg.grid.folds, a.folds);
            "grid-search"
        }
        Command::Evaluate(a) => {
            set_path(&mut d.input, &a.input.input);
            a.pipeline.apply(cfg)?;
            set(&mut cfg.eval.folds, a.folds);
            "evaluate"
        }
        Command::CrossEval(a) => {
            set_path(&mut d.train, &a.train);
            set_path(&mut d.test, &a.test);
            a.pipeline.apply(cfg)?;
            "cross-eval"
        }
        Command::Classify(a) => {
            set_path(&mut d.input, &a.input.input);
            set_path(&mut d.embeddings, &a.embeddings.embeddings);
            set_path(&mut d.model, &a.model);
            set(&mut cfg.eval.threshold, a.threshold);
            "classify"
        }
        Command::RankFeatures(a) => {
            set_path(&mut d.input, &a.input.input);
            a.pipeline.apply(cfg)?;
            "rank-features"
        }
        Command::Sample(a) => {
            set_path(&mut d.input, &a.input.input);
            set_path(&mut d.embeddings, &a.embeddings.embeddings);
            set(&mut cfg.sample.per_class, a.per_class);
            set(&mut cfg.sample.random, a.random);
            "sample"
        }
        Command::Report(_) => "report",
    };
    Ok(name)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let name = apply_flags(&cli, &mut cfg)?;
    cfg.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build_global()
        .context("starting the worker pool")?;

    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let run = match &cli.command {
        Command::Ingest(a) => commands::ingest(&cfg, &a.coded, a.policy)?,
        Command::Stats(_) => commands::stats(&cfg)?,
        Command::TrainEmbeddings(_) => commands::train_embeddings(&cfg)?,
        Command::Neighbors(a) => commands::neighbors(&cfg, &a.words, a.top)?,
        Command::EnrichKeywords(_) => commands::enrich_keywords(&cfg)?,
        Command::Features(_) => commands::features(&cfg)?,
        Command::Train(_) => commands::train(&cfg)?,
        Command::GridSearch(a) => commands::grid_search(&cfg, a.target)?,
        Command::Evaluate(a) => commands::evaluate(&cfg, &targets_or_all(&a.targets), a.cnn)?,
        Command::CrossEval(a) => commands::cross_eval(&cfg, &targets_or_all(&a.targets))?,
        Command::Classify(_) => commands::classify(&cfg)?,
        Command::RankFeatures(a) => commands::rank_features(&cfg, a.top)?,
        Command::Sample(_) => commands::sample(&cfg)?,
        Command::Report(a) => commands::report(&cfg, &a.metrics)?,
    };
    let inputs: Vec<&std::path::Path> = run.inputs.iter().map(PathBuf::as_path).collect();
    Manifest::new(name, &cfg, &inputs, run.outputs)?.write(&out)?;
    Ok(())
}

fn targets_or_all(targets: &[Target]) -> Vec<Target> {
    if targets.is_empty() {
        Target::ALL.to_vec()
    } else {
        targets.to_vec()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
