//! One function per subcommand. Each returns the files it read and wrote.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use metacom::corpus::{dataset_stats, DatasetFormat, LabeledDataset};
use metacom::embeddings::{train_doc_embeddings, DocEmbeddingModel, WordEmbeddingModel};
use metacom::eval::{
    cross_dataset_eval, cross_validate, grid_search as run_grid, labeled, CnnPipeline, CvResult, Pipeline, Target,
    TwoStepModel,
};
use metacom::features::{anova_f_scores, enrich_keywords as enrich, write_feature_matrix};
use metacom::sampling::{
    dedup_batches, load_coded, merge_annotations, sample_by_pattern, sample_by_similarity, sample_random,
    save_batches, MergePolicy,
};
use metacom::textprep::Preprocessor;
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{MetricsReport, MetricsRow};

#[derive(Debug, Default)]
pub struct Run {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
}

impl Run {
    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    /// Registers `name` as an output and returns its path under the output dir.
    fn output(&mut self, cfg: &RunConfig, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        cfg.output_dir.join(name)
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().with_context(|| format!("missing --{flag} (or the matching entry in the config file)"))
}

fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    LabeledDataset::load(path, DatasetFormat::CommentsJsonl).with_context(|| format!("loading {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

/// The word model of an embedding directory, or a bare `words.txt` file.
fn load_word_model(path: &Path) -> Result<WordEmbeddingModel> {
    let file = if path.is_dir() { path.join("words.txt") } else { path.to_path_buf() };
    WordEmbeddingModel::load(&file).with_context(|| format!("loading word vectors {}", file.display()))
}

pub fn ingest(cfg: &RunConfig, coded: &[PathBuf], policy: MergePolicy) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    let mut ds = load_dataset(input)?;
    if !coded.is_empty() {
        let mut codings = Vec::new();
        for p in coded {
            run.input(p);
            codings.extend(load_coded(p).with_context(|| format!("reading codings {}", p.display()))?);
        }
        let merged = merge_annotations(&ds, &codings, policy)?;
        let mut w = csv_writer(&run.output(cfg, "flagged.csv"))?;
        w.write_record(["comment_id", "codings"])?;
        for (id, sets) in &merged.flagged {
            let all: Vec<String> = sets.iter().map(|s| s.to_list()).collect();
            w.write_record([id.as_str(), &all.join(" | ")])?;
        }
        w.flush()?;
        println!("merged {} comments, {} flagged for review", merged.merged, merged.flagged.len());
        ds = merged.dataset;
    }
    ds.save(&run.output(cfg, "dataset.jsonl"))?;
    let stats = dataset_stats(&ds);
    write_json(&run.output(cfg, "stats.json"), &stats)?;
    print!("{stats}");
    Ok(run)
}

pub fn stats(cfg: &RunConfig) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    let stats = dataset_stats(&load_dataset(input)?);
    write_json(&run.output(cfg, "stats.json"), &stats)?;
    fs::write(run.output(cfg, "stats.txt"), stats.to_string())?;
    print!("{stats}");
    Ok(run)
}

pub fn train_embeddings(cfg: &RunConfig) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    let ds = load_dataset(input)?;
    let pre = Preprocessor::new(cfg.stopwords()?);
    let corpus: Vec<_> = ds.comments().map(|c| pre.preprocess(c, cfg.sample.remove_stopwords)).collect();
    let dm = train_doc_embeddings(&corpus, &cfg.word_params(), &cfg.inference_params())?;
    let dir = run.output(cfg, "embeddings");
    dm.save(&dir)?;
    let mut w = csv_writer(&run.output(cfg, "embedding_loss.csv"))?;
    w.write_record(["epoch", "loss"])?;
    for (e, l) in dm.word_model.loss_history.iter().enumerate() {
        w.write_record([e.to_string(), l.to_string()])?;
    }
    w.flush()?;
    println!("{} words, {} documents, dimension {}", dm.word_model.vocab().len(), dm.n_docs(), dm.dim());
    Ok(run)
}

pub fn neighbors(cfg: &RunConfig, words: &[String], top: usize) -> Result<Run> {
    let mut run = Run::default();
    let path = required(&cfg.data.embeddings, "embeddings")?;
    run.input(path);
    let m = load_word_model(path)?;
    let mut w = csv_writer(&run.output(cfg, "neighbors.csv"))?;
    w.write_record(["word", "rank", "neighbor", "similarity"])?;
    for word in words {
        let list = m.most_similar(word, top).with_context(|| format!("looking up {word:?}"))?;
        println!("{word}");
        for (i, (n, s)) in list.iter().enumerate() {
            println!("  {:>2}  {n:<24} {s:.4}", i + 1);
            w.write_record([word.as_str(), &(i + 1).to_string(), n, &s.to_string()])?;
        }
    }
    w.flush()?;
    Ok(run)
}

pub fn enrich_keywords(cfg: &RunConfig) -> Result<Run> {
    let mut run = Run::default();
    let path = required(&cfg.data.embeddings, "embeddings")?;
    run.input(path);
    if let Some(dir) = &cfg.resources.keywords_dir {
        run.input(dir);
    }
    let m = load_word_model(path)?;
    let dir = cfg.output_dir.join("keywords");
    fs::create_dir_all(&dir)?;
    let mut sets = Vec::new();
    for base in cfg.keyword_sets()? {
        let ks = enrich(base.class, &base.seeds, &m, cfg.sample.enrich_top_n, cfg.sample.enrich_min_sim);
        if !ks.no_embedding.is_empty() {
            log::warn!("{}: no embedding for {}", ks.class, ks.no_embedding.join(", "));
        }
        let name = format!("keywords/{}.txt", ks.class.slug());
        fs::write(run.output(cfg, &name), ks.enriched.join("\n") + "\n")?;
        println!("{:<11} {} seeds -> {} keywords", ks.class.to_string(), ks.seeds.len(), ks.enriched.len());
        sets.push(ks);
    }
    write_json(&run.output(cfg, "keywords.json"), &sets)?;
    Ok(run)
}

fn pipeline_inputs(cfg: &RunConfig, run: &mut Run) {
    for p in [&cfg.data.embeddings, &cfg.resources.stopwords, &cfg.resources.keywords_dir, &cfg.resources.lexicon, &cfg.resources.departments]
        .into_iter()
        .flatten()
    {
        run.input(p);
    }
}

pub fn features(cfg: &RunConfig) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    pipeline_inputs(cfg, &mut run);
    let ds = load_dataset(input)?;
    let p = cfg.pipeline()?;
    let extractor = p.resources.fit(&p.features, &labeled(&ds))?;
    let rows = extractor.assemble_dataset(&ds)?;
    write_feature_matrix(&run.output(cfg, "features.txt"), &rows, extractor.registry())?;
    run.outputs.push("features.txt.names".into());
    write_json(&run.output(cfg, "extractor.json"), &extractor.state())?;
    let mut w = csv_writer(&run.output(cfg, "labels.csv"))?;
    w.write_record(["row", "comment_id", "labels"])?;
    for (i, e) in ds.entries.iter().enumerate() {
        w.write_record([i.to_string(), e.comment.id.clone(), e.labels.to_list()])?;
    }
    w.flush()?;
    println!("{} rows, {} features", rows.len(), extractor.registry().len());
    Ok(run)
}

pub fn train(cfg: &RunConfig) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    pipeline_inputs(cfg, &mut run);
    let ds = load_dataset(input)?;
    let model = TwoStepModel::fit(&cfg.pipeline()?, &ds, cfg.seed_for("pipeline"), cfg.eval.threshold)?;
    model.save(&run.output(cfg, "model"))?;
    println!("trained on {} labeled comments, {} features", labeled(&ds).len(), model.extractor.registry().len());
    Ok(run)
}

pub fn grid_search(cfg: &RunConfig, target: Target) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    pipeline_inputs(cfg, &mut run);
    let ds = load_dataset(input)?;
    let result = run_grid(&cfg.grid, &cfg.pipeline()?, &ds, target, cfg.seed_for("pipeline"))?;
    result.write_csv(BufWriter::new(fs::File::create(run.output(cfg, "grid.csv"))?))?;
    let best = result.best_row();
    #[derive(Serialize)]
    struct Best<'a> {
        target: Target,
        classifier: &'a metacom::classifiers::ClassifierParams,
        select: metacom::features::SelectK,
        mean: metacom::eval::Metrics,
        pooled: metacom::eval::Metrics,
    }
    write_json(
        &run.output(cfg, "best.json"),
        &Best { target, classifier: &best.classifier, select: best.select, mean: best.cv.mean, pooled: best.cv.pooled },
    )?;
    println!(
        "best of {}: {} select {} F{} = {:.4}",
        result.rows.len(),
        best.classifier.describe(),
        best.select,
        cfg.grid.beta,
        best.cv.mean.f_beta
    );
    Ok(run)
}

fn write_cv(cfg: &RunConfig, run: &mut Run, results: &[CvResult]) -> Result<()> {
    let mut w = csv_writer(&run.output(cfg, "cv.csv"))?;
    w.write_record(["target", "fold", "precision", "recall", "f_beta", "beta", "tp", "fp", "fn", "tn"])?;
    for r in results {
        let rows = r.folds.iter().enumerate().map(|(i, m)| (i.to_string(), m)).chain([
            ("mean".to_string(), &r.mean),
            ("pooled".to_string(), &r.pooled),
        ]);
        for (fold, m) in rows {
            w.write_record([
                r.target.name().to_string(),
                fold,
                m.precision.to_string(),
                m.recall.to_string(),
                m.f_beta.to_string(),
                m.beta.to_string(),
                m.tp.to_string(),
                m.fp.to_string(),
                m.fn_.to_string(),
                m.tn.to_string(),
            ])?;
        }
    }
    w.flush()?;
    let mut w = csv_writer(&run.output(cfg, "folds.csv"))?;
    w.write_record(["target", "comment_id", "fold"])?;
    for r in results {
        for (id, f) in &r.assignment {
            w.write_record([r.target.name(), id, &f.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn report_out(cfg: &RunConfig, run: &mut Run, report: &MetricsReport) -> Result<()> {
    write_json(&run.output(cfg, "metrics.json"), report)?;
    let text = report.render();
    fs::write(run.output(cfg, "metrics.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, targets: &[Target], cnn: bool) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    pipeline_inputs(cfg, &mut run);
    let ds = load_dataset(input)?;
    let (k, beta, seed) = (cfg.eval.folds, cfg.eval.beta, cfg.seed_for("pipeline"));
    let (title, results) = if cnn {
        let path = required(&cfg.data.embeddings, "embeddings")?;
        let p = CnnPipeline::new(Arc::new(load_word_model(path)?), cfg.cnn.clone());
        (format!("cnn, {k}-fold"), cv_all(&p, &ds, targets, k, seed, beta)?)
    } else {
        let p = cfg.pipeline()?;
        let title = format!("{} select {}, {k}-fold", p.classifier.describe(), p.select);
        (title, cv_all(&p, &ds, targets, k, seed, beta)?)
    };
    write_cv(cfg, &mut run, &results)?;
    let rows = results.iter().map(|r| MetricsRow { target: r.target.name().into(), metrics: r.mean }).collect();
    report_out(cfg, &mut run, &MetricsReport { title, rows })?;
    Ok(run)
}

fn cv_all<P: Pipeline>(p: &P, ds: &LabeledDataset, targets: &[Target], k: usize, seed: u64, beta: f64) -> Result<Vec<CvResult>> {
    targets
        .iter()
        .map(|&t| cross_validate(p, ds, t, k, seed, beta).with_context(|| format!("evaluating {t}")))
        .collect()
}

pub fn cross_eval(cfg: &RunConfig, targets: &[Target]) -> Result<Run> {
    let mut run = Run::default();
    let train = required(&cfg.data.train, "train")?;
    let test = required(&cfg.data.test, "test")?;
    run.input(train);
    run.input(test);
    pipeline_inputs(cfg, &mut run);
    let (a, b) = (load_dataset(train)?, load_dataset(test)?);
    let p = cfg.pipeline()?;
    let results = cross_dataset_eval(&p, &a, &b, targets, cfg.seed_for("pipeline"), cfg.eval.beta)?;
    let title = format!("train {} -> test {}, {}", a.source_tag, b.source_tag, p.classifier.describe());
    let rows = results.into_iter().map(|(t, m)| MetricsRow { target: t.name().into(), metrics: m }).collect();
    report_out(cfg, &mut run, &MetricsReport { title, rows })?;
    Ok(run)
}

#[derive(Serialize)]
struct Classification<'a> {
    id: &'a str,
    meta: bool,
    addressees: Vec<&'static str>,
    meta_confidence: Option<f64>,
    confidences: Vec<(&'static str, f64)>,
}

pub fn classify(cfg: &RunConfig) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    let model_dir = required(&cfg.data.model, "model")?;
    run.input(input);
    run.input(model_dir);
    let dm = match &cfg.data.embeddings {
        Some(p) => {
            run.input(p);
            Some(Arc::new(DocEmbeddingModel::load(p).with_context(|| format!("loading embeddings {}", p.display()))?))
        }
        None => None,
    };
    let ds = load_dataset(input)?;
    let mut model = TwoStepModel::load(model_dir, dm).with_context(|| format!("loading model {}", model_dir.display()))?;
    model.threshold = cfg.eval.threshold;
    let mut w = BufWriter::new(fs::File::create(run.output(cfg, "classifications.jsonl"))?);
    let mut n_meta = 0;
    for c in ds.comments() {
        let out = model.classify(c).with_context(|| format!("classifying {}", c.id))?;
        n_meta += usize::from(out.meta);
        let line = Classification {
            id: &c.id,
            meta: out.meta,
            addressees: out.addressees.iter().map(|a| a.label().as_str()).collect(),
            meta_confidence: out.meta_confidence,
            confidences: out.confidences.iter().map(|(a, p)| (a.label().as_str(), *p)).collect(),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    println!("{} comments, {} meta", ds.len(), n_meta);
    Ok(run)
}

pub fn rank_features(cfg: &RunConfig, top: usize) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    pipeline_inputs(cfg, &mut run);
    let ds = labeled(&load_dataset(input)?);
    if ds.is_empty() {
        bail!("no labeled comments in {}", input.display());
    }
    let p = cfg.pipeline()?;
    let extractor = p.resources.fit(&p.features, &ds)?;
    let x = extractor.assemble_dataset(&ds)?;
    let registry = extractor.registry();
    let mut w = csv_writer(&run.output(cfg, "feature_ranking.csv"))?;
    w.write_record(["target", "rank", "feature", "f_value"])?;
    let mut text = String::new();
    for t in Target::ALL {
        let scores = anova_f_scores(&x, &t.labels(&ds), registry.len())?;
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        text.push_str(&format!("{t}\n{:>4}  {:<40} {:>12}\n", "rank", "feature", "F"));
        for (rank, &col) in order.iter().take(top).enumerate() {
            text.push_str(&format!("{:>4}  {:<40} {:>12.3}\n", rank + 1, registry.name(col), scores[col]));
            w.write_record([t.name(), &(rank + 1).to_string(), registry.name(col), &scores[col].to_string()])?;
        }
        text.push('\n');
    }
    w.flush()?;
    fs::write(run.output(cfg, "feature_ranking.txt"), &text)?;
    print!("{text}");
    Ok(run)
}

pub fn sample(cfg: &RunConfig) -> Result<Run> {
    let mut run = Run::default();
    let input = required(&cfg.data.input, "input")?;
    run.input(input);
    if let Some(dir) = &cfg.resources.keywords_dir {
        run.input(dir);
    }
    let ds = load_dataset(input)?;
    let sets = cfg.keyword_sets()?;
    let mut batches = Vec::new();
    for ks in &sets {
        batches.push(sample_by_pattern(&ds, ks, cfg.sample.per_class)?);
    }
    if let Some(p) = &cfg.data.embeddings {
        run.input(p);
        let dm = DocEmbeddingModel::load(p).with_context(|| format!("loading embeddings {}", p.display()))?;
        let pre = Preprocessor::new(cfg.stopwords()?);
        for ks in &sets {
            batches.push(sample_by_similarity(&ds, ks, &dm.word_model, &dm, &pre, cfg.sample.per_class)?);
        }
    }
    batches.push(sample_random(&ds, cfg.sample.random, cfg.seed_for("sampling")));
    let batches = dedup_batches(batches);
    save_batches(&run.output(cfg, "batches.csv"), &batches)?;
    for b in &batches {
        println!("{:<24} {}", b.batch_id, b.len());
    }
    Ok(run)
}

pub fn report(cfg: &RunConfig, files: &[PathBuf]) -> Result<Run> {
    let mut run = Run::default();
    let mut text = String::new();
    for f in files {
        run.input(f);
        let r: MetricsReport = serde_json::from_str(&fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?)
            .with_context(|| format!("{} is not a metrics file", f.display()))?;
        text.push_str(&r.render());
        text.push('\n');
    }
    fs::write(run.output(cfg, "report.txt"), &text)?;
    print!("{text}");
    Ok(run)
}
