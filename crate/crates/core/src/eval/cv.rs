//! Cross-validation, grid search and cross-dataset evaluation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::stratified_k_fold;
use super::metrics::Metrics;
use super::pipeline::{FitContext, Pipeline, TraditionalPipeline};
use super::{EvalError, Target};
use crate::classifiers::{AdaBoostParams, ClassifierParams, ForestParams, KnnParams, SvmParams, TreeParams};
use crate::corpus::LabeledDataset;
use crate::features::SelectK;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub target: Target,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Metrics>,
    /// Mean over folds; the canonical aggregate.
    pub mean: Metrics,
    /// Metrics of the pooled confusion counts.
    pub pooled: Metrics,
    /// (comment id, test fold) for every labeled comment.
    pub assignment: Vec<(String, usize)>,
}

/// The labeled entries of `ds`, in dataset order.
pub fn labeled(ds: &LabeledDataset) -> LabeledDataset {
    let idx: Vec<usize> = (0..ds.len()).filter(|&i| Target::is_labeled(ds.entries[i].labels)).collect();
    ds.subset(&idx)
}

/// Stratified k-fold cross-validation over the labeled entries. Each fold is
/// fitted with its own derived seed, so folds may run in parallel.
pub fn cross_validate<P: Pipeline>(
    pipeline: &P,
    ds: &LabeledDataset,
    target: Target,
    k: usize,
    seed: u64,
    beta: f64,
) -> Result<CvResult, EvalError> {
    let ds = labeled(ds);
    let y = target.labels(&ds);
    let folds = stratified_k_fold(&y, k, seed::derive_seed(seed, "cv-folds"))?;
    let folds_metrics: Vec<Metrics> = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let wrap = |e: EvalError| EvalError::Fold { fold: i, source: Box::new(e) };
            let train = ds.subset(&fold.train);
            let test = ds.subset(&fold.test);
            let mut ctx = FitContext::new(seed::derive_indexed(seed, "cv-fit", i));
            let model = pipeline.fit(&train, target, &mut ctx).map_err(wrap)?;
            let allowed: std::collections::BTreeSet<&str> = train.comments().map(|c| c.id.as_str()).collect();
            if let Some(id) = ctx.seen().iter().find(|id| !allowed.contains(id.as_str())) {
                return Err(EvalError::Leak { fold: i, id: id.clone() });
            }
            let predicted = pipeline.predict(&model, &test).map_err(wrap)?;
            let truth: Vec<bool> = fold.test.iter().map(|&j| y[j]).collect();
            Ok(Metrics::from_predictions(&predicted, &truth, beta))
        })
        .collect::<Result<_, _>>()?;
    let mut assignment = vec![(String::new(), 0); ds.len()];
    for (f, fold) in folds.iter().enumerate() {
        for &j in &fold.test {
            assignment[j] = (ds.entries[j].comment.id.clone(), f);
        }
    }
    Ok(CvResult {
        target,
        k,
        seed,
        mean: Metrics::mean(&folds_metrics),
        pooled: Metrics::pooled(&folds_metrics),
        folds: folds_metrics,
        assignment,
    })
}

/// Fits on the labeled part of `train` and scores on the labeled part of
/// `test`, once per target.
pub fn cross_dataset_eval<P: Pipeline>(
    pipeline: &P,
    train: &LabeledDataset,
    test: &LabeledDataset,
    targets: &[Target],
    seed: u64,
    beta: f64,
) -> Result<Vec<(Target, Metrics)>, EvalError> {
    let (train, test) = (labeled(train), labeled(test));
    targets
        .iter()
        .map(|&t| {
            let mut ctx = FitContext::new(seed::derive_seed(seed, &format!("cross-dataset/{}", t.name())));
            let model = pipeline.fit(&train, t, &mut ctx)?;
            let predicted = pipeline.predict(&model, &test)?;
            Ok((t, Metrics::from_predictions(&predicted, &t.labels(&test), beta)))
        })
        .collect()
}

/// Value lists for one classifier kind; expanded as a cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierGrid {
    LinearSvm { c: Vec<f64> },
    DecisionTree { max_depth: Vec<usize>, min_leaf: Vec<usize> },
    RandomForest { n_trees: Vec<usize>, max_depth: Vec<usize> },
    AdaBoost { n_estimators: Vec<usize>, learning_rate: Vec<f64> },
    Knn { k: Vec<usize> },
}

impl ClassifierGrid {
    pub fn expand(&self) -> Vec<ClassifierParams> {
        let mut out = Vec::new();
        match self {
            ClassifierGrid::LinearSvm { c } => {
                out.extend(c.iter().map(|&c| ClassifierParams::LinearSvm(SvmParams { c, ..SvmParams::default() })));
            }
            ClassifierGrid::DecisionTree { max_depth, min_leaf } => {
                for &d in max_depth {
                    for &l in min_leaf {
                        out.push(ClassifierParams::DecisionTree(TreeParams { max_depth: d, min_leaf: l }));
                    }
                }
            }
            ClassifierGrid::RandomForest { n_trees, max_depth } => {
                for &t in n_trees {
                    for &d in max_depth {
                        out.push(ClassifierParams::RandomForest(ForestParams { n_trees: t, max_depth: d, ..ForestParams::default() }));
                    }
                }
            }
            ClassifierGrid::AdaBoost { n_estimators, learning_rate } => {
                for &n in n_estimators {
                    for &lr in learning_rate {
                        out.push(ClassifierParams::AdaBoost(AdaBoostParams { n_estimators: n, learning_rate: lr }));
                    }
                }
            }
            ClassifierGrid::Knn { k } => {
                out.extend(k.iter().map(|&k| ClassifierParams::Knn(KnnParams { k, ..KnnParams::default() })));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub classifiers: Vec<ClassifierGrid>,
    pub select: Vec<SelectK>,
    pub folds: usize,
    pub beta: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            classifiers: vec![
                ClassifierGrid::LinearSvm { c: vec![0.1, 0.5, 1.0, 2.0, 10.0] },
                ClassifierGrid::DecisionTree { max_depth: vec![5, 10, 20], min_leaf: vec![2] },
                ClassifierGrid::RandomForest { n_trees: vec![50, 100], max_depth: vec![20] },
                ClassifierGrid::AdaBoost { n_estimators: vec![50, 100], learning_rate: vec![1.0] },
                ClassifierGrid::Knn { k: vec![1, 5, 15] },
            ],
            select: vec![SelectK::Top(10), SelectK::Top(50), SelectK::All],
            folds: 3,
            beta: 0.5,
        }
    }
}

impl GridSpec {
    /// Every (classifier, select) pair: classifiers in listed order, each
    /// expanded, then the select options.
    pub fn combinations(&self) -> Vec<(ClassifierParams, SelectK)> {
        let mut out = Vec::new();
        for g in &self.classifiers {
            for p in g.expand() {
                for &s in &self.select {
                    out.push((p.clone(), s));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub classifier: ClassifierParams,
    pub select: SelectK,
    pub cv: CvResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    /// Index of the highest mean F; the first one wins ties.
    pub best: usize,
}

impl GridResult {
    pub fn best_row(&self) -> &GridRow {
        &self.rows[self.best]
    }

    /// One row per (configuration, fold) and one `mean` row per
    /// configuration that also carries the pooled metrics.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "config", "kind", "params", "select_k", "fold", "precision", "recall", "f_beta", "beta", "tp", "fp", "fn", "tn",
            "pooled_precision", "pooled_recall", "pooled_f_beta",
        ])?;
        for (i, row) in self.rows.iter().enumerate() {
            let head = [i.to_string(), row.classifier.kind().to_string(), row.classifier.describe(), row.select.to_string()];
            let metric_fields = |m: &Metrics| {
                [m.precision, m.recall, m.f_beta, m.beta]
                    .map(|v| v.to_string())
                    .into_iter()
                    .chain([m.tp, m.fp, m.fn_, m.tn].map(|v| v.to_string()))
                    .collect::<Vec<_>>()
            };
            for (f, m) in row.cv.folds.iter().enumerate() {
                let mut rec: Vec<String> = head.to_vec();
                rec.push(f.to_string());
                rec.extend(metric_fields(m));
                rec.extend([String::new(), String::new(), String::new()]);
                out.write_record(&rec)?;
            }
            let mut rec: Vec<String> = head.to_vec();
            rec.push("mean".into());
            rec.extend(metric_fields(&row.cv.mean));
            let p = &row.cv.pooled;
            rec.extend([p.precision, p.recall, p.f_beta].map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Cross-validates every grid combination on the same folds and picks the
/// highest mean F-beta.
pub fn grid_search(
    grid: &GridSpec,
    base: &TraditionalPipeline,
    ds: &LabeledDataset,
    target: Target,
    seed: u64,
) -> Result<GridResult, EvalError> {
    let combos = grid.combinations();
    if combos.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let rows: Vec<GridRow> = combos
        .into_par_iter()
        .map(|(classifier, select)| {
            let p = TraditionalPipeline { classifier: classifier.clone(), select, ..base.clone() };
            let cv = cross_validate(&p, ds, target, grid.folds, seed, grid.beta)?;
            Ok(GridRow { classifier, select, cv })
        })
        .collect::<Result<_, EvalError>>()?;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.cv.mean.f_beta > rows[best].cv.mean.f_beta {
            best = i;
        }
    }
    Ok(GridResult { rows, best })
}
