//! Trainable pipelines: feature extraction plus a classifier, or the CNN.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{folds::stratified_k_fold, EvalError, Target};
use crate::classifiers::{self, ClassifierParams, ColumnMap, TrainedModel};
use crate::corpus::LabeledDataset;
use crate::embeddings::WordEmbeddingModel;
use crate::features::{anova_f_scores, select_k_best, FeatureConfig, FeatureExtractor, FeatureResources, FeatureVector, SelectK};
use crate::neural::{self, CnnConfig, CnnModel};
use crate::seed;
use crate::textprep::{Preprocessor, StopWords};

/// Passed to [`Pipeline::fit`]; the pipeline records the id of every comment
/// it fits anything on, so callers can verify that no test comment leaked in.
#[derive(Debug, Clone)]
pub struct FitContext {
    pub seed: u64,
    seen: BTreeSet<String>,
}

impl FitContext {
    pub fn new(seed: u64) -> Self {
        FitContext { seed, seen: BTreeSet::new() }
    }

    pub fn record(&mut self, ds: &LabeledDataset) {
        self.seen.extend(ds.comments().map(|c| c.id.clone()));
    }

    pub fn seen(&self) -> &BTreeSet<String> {
        &self.seen
    }
}

pub trait Pipeline: Sync {
    type Model: Send + Sync;

    fn fit(&self, train: &LabeledDataset, target: Target, ctx: &mut FitContext) -> Result<Self::Model, EvalError>;

    fn predict(&self, model: &Self::Model, test: &LabeledDataset) -> Result<Vec<bool>, EvalError>;
}

/// Hand-crafted features, ANOVA top-k selection and a classifier.
#[derive(Debug, Clone)]
pub struct TraditionalPipeline {
    pub resources: FeatureResources,
    pub features: FeatureConfig,
    pub select: SelectK,
    pub classifier: ClassifierParams,
    /// Attach a sigmoid fitted on inner 3-fold cross-validation decision values.
    pub calibrate: bool,
}

#[derive(Debug, Clone)]
pub struct TraditionalModel {
    pub extractor: FeatureExtractor,
    pub model: TrainedModel,
    /// ANOVA F-score of every registry column on the training rows.
    pub scores: Vec<f64>,
}

impl TraditionalModel {
    pub fn features(&self, ds: &LabeledDataset) -> Result<Vec<FeatureVector>, EvalError> {
        Ok(self.extractor.assemble_dataset(ds)?)
    }
}

pub const CALIBRATION_FOLDS: usize = 3;

impl TraditionalPipeline {
    pub fn new(resources: FeatureResources, features: FeatureConfig, classifier: ClassifierParams) -> Self {
        TraditionalPipeline { resources, features, select: SelectK::All, classifier, calibrate: false }
    }

    /// Selects columns by ANOVA on `x` and trains the classifier. A `k` above
    /// the number of features keeps all of them.
    pub fn train_on(
        &self,
        extractor: &FeatureExtractor,
        x: &[FeatureVector],
        y: &[bool],
        seed: u64,
    ) -> Result<(TrainedModel, Vec<f64>), EvalError> {
        let registry = extractor.registry();
        let scores = anova_f_scores(x, y, registry.len())?;
        let select = match self.select {
            SelectK::Top(k) if k > registry.len() => SelectK::All,
            s => s,
        };
        let mut cols = select_k_best(&scores, select)?;
        cols.sort_unstable();
        let params = self.classifier.with_seed(seed);
        let model = classifiers::train(&params, x, y, registry.version(), ColumnMap::new(cols, registry.len()))?;
        Ok((model, scores))
    }

    fn fit_uncalibrated(&self, train: &LabeledDataset, target: Target, seed: u64) -> Result<TraditionalModel, EvalError> {
        let extractor = self.resources.fit(&self.features, train)?;
        let x = extractor.assemble_dataset(train)?;
        let y = target.labels(train);
        let (model, scores) = self.train_on(&extractor, &x, &y, seed)?;
        Ok(TraditionalModel { extractor, model, scores })
    }

    /// Out-of-fold decision values on `train`, each from a pipeline refitted
    /// without that fold.
    pub fn inner_decision_values(&self, train: &LabeledDataset, target: Target, seed: u64) -> Result<Vec<f64>, EvalError> {
        let y = target.labels(train);
        let folds = stratified_k_fold(&y, CALIBRATION_FOLDS, seed::derive_seed(seed, "calibration-folds"))?;
        let mut values = vec![0.0; y.len()];
        for (i, fold) in folds.iter().enumerate() {
            let m = self.fit_uncalibrated(&train.subset(&fold.train), target, seed::derive_indexed(seed, "calibration-fit", i))?;
            let x = m.features(&train.subset(&fold.test))?;
            for (&row, v) in fold.test.iter().zip(&x) {
                values[row] = m.model.decision_value(v)?;
            }
        }
        Ok(values)
    }

    /// Decision values of `model` on `ds`.
    pub fn decision_values(&self, model: &TraditionalModel, ds: &LabeledDataset) -> Result<Vec<f64>, EvalError> {
        let x = model.features(ds)?;
        x.iter().map(|v| Ok(model.model.decision_value(v)?)).collect()
    }
}

impl Pipeline for TraditionalPipeline {
    type Model = TraditionalModel;

    fn fit(&self, train: &LabeledDataset, target: Target, ctx: &mut FitContext) -> Result<TraditionalModel, EvalError> {
        ctx.record(train);
        let mut m = self.fit_uncalibrated(train, target, ctx.seed)?;
        if self.calibrate {
            let values = self.inner_decision_values(train, target, ctx.seed)?;
            m.model.calibrate_with_values(&values, &target.labels(train))?;
        }
        Ok(m)
    }

    fn predict(&self, model: &TraditionalModel, test: &LabeledDataset) -> Result<Vec<bool>, EvalError> {
        Ok(self.decision_values(model, test)?.into_iter().map(|f| f >= 0.0).collect())
    }
}

/// The CNN on preprocessed tokens, stop words kept.
#[derive(Debug, Clone)]
pub struct CnnPipeline {
    pub word_model: Arc<WordEmbeddingModel>,
    pub config: CnnConfig,
    pub preprocessor: Preprocessor,
}

impl CnnPipeline {
    pub fn new(word_model: Arc<WordEmbeddingModel>, config: CnnConfig) -> Self {
        CnnPipeline { word_model, config, preprocessor: Preprocessor::new(StopWords::none()) }
    }

    pub fn encode(&self, model: &CnnModel, ds: &LabeledDataset) -> Vec<Vec<usize>> {
        ds.comments().map(|c| model.encode(&self.preprocessor.preprocess(c, false).tokens)).collect()
    }
}

impl Pipeline for CnnPipeline {
    type Model = CnnModel;

    fn fit(&self, train: &LabeledDataset, target: Target, ctx: &mut FitContext) -> Result<CnnModel, EvalError> {
        ctx.record(train);
        let cfg = CnnConfig { seed: ctx.seed, ..self.config.clone() };
        let model = CnnModel::build(&self.word_model, &cfg)?;
        let seqs = self.encode(&model, train);
        let (trained, _) = neural::train(&model, &seqs, &target.labels(train))?;
        Ok(trained)
    }

    fn predict(&self, model: &CnnModel, test: &LabeledDataset) -> Result<Vec<bool>, EvalError> {
        Ok(self.encode(model, test).iter().map(|s| model.predict(s)).collect())
    }
}
