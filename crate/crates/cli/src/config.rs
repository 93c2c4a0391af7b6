//! Run configuration: a TOML file, overridden by command-line flags, and
//! written back into every output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use metacom::classifiers::ClassifierParams;
use metacom::corpus::Addressee;
use metacom::embeddings::{DocEmbeddingModel, InferenceParams, WordEmbeddingParams};
use metacom::eval::{GridSpec, TraditionalPipeline, DEFAULT_THRESHOLD};
use metacom::features::{
    default_departments, metadata::departments_from_file, FeatureConfig, FeatureResources, KeywordSet, SelectK,
    SentimentLexicon,
};
use metacom::neural::CnnConfig;
use metacom::seed::derive_seed;
use metacom::textprep::StopWords;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub output_dir: PathBuf,
    pub data: DataPaths,
    pub resources: ResourcePaths,
    pub features: FeatureConfig,
    pub select: SelectK,
    pub classifier: ClassifierParams,
    pub grid: GridSpec,
    pub eval: EvalSettings,
    pub embeddings: WordEmbeddingParams,
    pub inference: InferenceParams,
    pub cnn: CnnConfig,
    pub sample: SampleSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            jobs: 1,
            output_dir: PathBuf::from("out"),
            data: DataPaths::default(),
            resources: ResourcePaths::default(),
            features: FeatureConfig::all(),
            select: SelectK::All,
            classifier: ClassifierParams::svm(0.5),
            grid: GridSpec::default(),
            eval: EvalSettings::default(),
            embeddings: WordEmbeddingParams::default(),
            inference: InferenceParams::default(),
            cnn: CnnConfig::default(),
            sample: SampleSettings::default(),
        }
    }
}

/// Dataset and model locations; filled from flags when given there.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub input: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

/// Overrides for the shipped German resources.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub stopwords: Option<PathBuf>,
    /// Directory with `media.txt`, `journalist.txt` and `moderator.txt`.
    pub keywords_dir: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub departments: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub folds: usize,
    pub beta: f64,
    pub threshold: f64,
    pub calibrate: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { folds: 10, beta: 0.5, threshold: DEFAULT_THRESHOLD, calibrate: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSettings {
    pub per_class: usize,
    pub random: usize,
    pub enrich_top_n: usize,
    pub enrich_min_sim: f64,
    /// Remove stop words before embedding training.
    pub remove_stopwords: bool,
}

impl Default for SampleSettings {
    fn default() -> Self {
        SampleSettings { per_class: 100, random: 100, enrich_top_n: 10, enrich_min_sim: 0.5, remove_stopwords: true }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Sub-seeds handed to each subsystem, derived from the master seed.
    pub fn seeds(&self) -> Vec<(&'static str, u64)> {
        ["embeddings", "inference", "pipeline", "sampling"]
            .into_iter()
            .map(|p| (p, derive_seed(self.seed, p)))
            .collect()
    }

    pub fn seed_for(&self, purpose: &str) -> u64 {
        derive_seed(self.seed, purpose)
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        if self.eval.folds < 2 {
            bail!("eval.folds must be at least 2");
        }
        if !(self.eval.beta > 0.0) {
            bail!("eval.beta must be positive");
        }
        if !(0.0..=1.0).contains(&self.eval.threshold) {
            bail!("eval.threshold must lie in [0, 1]");
        }
        self.classifier.validate()?;
        self.embeddings.validate()?;
        self.cnn.validate()?;
        Ok(())
    }

    pub fn word_params(&self) -> WordEmbeddingParams {
        WordEmbeddingParams { seed: self.seed_for("embeddings"), ..self.embeddings.clone() }
    }

    pub fn inference_params(&self) -> InferenceParams {
        InferenceParams { seed: self.seed_for("inference"), ..self.inference.clone() }
    }

    pub fn stopwords(&self) -> Result<StopWords> {
        match &self.resources.stopwords {
            Some(p) => StopWords::from_file(p).with_context(|| format!("reading stop words {}", p.display())),
            None => Ok(StopWords::german()),
        }
    }

    pub fn keyword_sets(&self) -> Result<Vec<KeywordSet>> {
        Addressee::ALL
            .iter()
            .map(|&a| match &self.resources.keywords_dir {
                Some(dir) => {
                    let p = dir.join(format!("{}.txt", a.slug()));
                    KeywordSet::from_file(a, &p).with_context(|| format!("reading keywords {}", p.display()))
                }
                None => Ok(KeywordSet::default_for(a)),
            })
            .collect()
    }

    pub fn doc_model(&self) -> Result<Option<Arc<DocEmbeddingModel>>> {
        match &self.data.embeddings {
            Some(dir) => {
                let dm = DocEmbeddingModel::load(dir).with_context(|| format!("loading embeddings {}", dir.display()))?;
                Ok(Some(Arc::new(dm)))
            }
            None => Ok(None),
        }
    }

    pub fn resources(&self, doc_model: Option<Arc<DocEmbeddingModel>>) -> Result<FeatureResources> {
        let lexicon = match &self.resources.lexicon {
            Some(p) => SentimentLexicon::from_file(p).with_context(|| format!("reading lexicon {}", p.display()))?,
            None => SentimentLexicon::german(),
        };
        let departments = match &self.resources.departments {
            Some(p) => departments_from_file(p).with_context(|| format!("reading departments {}", p.display()))?,
            None => default_departments(),
        };
        Ok(FeatureResources {
            keyword_sets: self.keyword_sets()?,
            extra_patterns: Vec::new(),
            lexicon,
            departments,
            stopwords: self.stopwords()?,
            doc_model,
        })
    }

    /// Feature groups, minus the embedding groups when no model is loaded.
    pub fn effective_features(&self, has_doc_model: bool) -> FeatureConfig {
        if self.features.needs_doc_model() && !has_doc_model {
            log::warn!("no embeddings given; semantic feature groups are disabled");
            self.features.without_embeddings()
        } else {
            self.features.clone()
        }
    }

    /// The traditional pipeline with the configured resources and classifier.
    pub fn pipeline(&self) -> Result<TraditionalPipeline> {
        let dm = self.doc_model()?;
        let features = self.effective_features(dm.is_some());
        let mut p = TraditionalPipeline::new(self.resources(dm)?, features, self.classifier.clone());
        p.select = self.select;
        p.calibrate = self.eval.calibrate;
        Ok(p)
    }
}
