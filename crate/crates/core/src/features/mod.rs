//! Hand-crafted comment features: regex patterns, keyword flags, tf-idf,
//! text statistics, semantic distances and metadata.
//!
//! A [`FeatureExtractor`] owns every fitted model and a frozen
//! [`FeatureRegistry`]; the same extractor must be used for training and
//! prediction so that column indices line up.

pub mod anova;
pub mod keywords;
pub mod metadata;
pub mod semantic;
pub mod text_stats;
pub mod tfidf;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Addressee, Comment, Label, LabeledDataset};
use crate::embeddings::DocEmbeddingModel;
use crate::textprep::{NgramRange, Preprocessor, StopWords, TokenStream};

pub use anova::{anova_f, anova_f_scores, select_k_best, SelectK};
pub use keywords::{compile_pattern, enrich_keywords, KeywordMatcher, KeywordSet, PatternSet};
pub use metadata::{default_departments, metadata_features, metadata_names};
pub use semantic::{class_vectors, class_vectors_from, semantic_features, ClassVector, SemanticFeatures};
pub use text_stats::{text_stats, SentimentLexicon, TextStats, TEXT_STAT_NAMES};
pub use tfidf::TfidfModel;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature group {0} is enabled but its model was not fitted")]
    MissingModel(FeatureGroup),
    #[error("class {0} has no members")]
    EmptyClass(Label),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("k = {k} exceeds the number of features ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sentiment lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("feature registry mismatch: expected {expected}, found {found}")]
    RegistryMismatch { expected: String, found: String },
    #[error("{path}: line {line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Regex,
    Keywords,
    Tfidf,
    Text,
    Semantic,
    SemanticDims,
    Metadata,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 7] = [
        FeatureGroup::Regex,
        FeatureGroup::Keywords,
        FeatureGroup::Tfidf,
        FeatureGroup::Text,
        FeatureGroup::Semantic,
        FeatureGroup::SemanticDims,
        FeatureGroup::Metadata,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Regex => "regex",
            FeatureGroup::Keywords => "keywords",
            FeatureGroup::Tfidf => "tfidf",
            FeatureGroup::Text => "text",
            FeatureGroup::Semantic => "semantic",
            FeatureGroup::SemanticDims => "semantic_dims",
            FeatureGroup::Metadata => "metadata",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Enabled feature groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub regex: bool,
    pub keywords: bool,
    pub tfidf: bool,
    pub text: bool,
    pub semantic: bool,
    /// Raw document-vector components (`semantic_sem_<i>`).
    pub semantic_dims: bool,
    pub metadata: bool,
    pub tfidf_min_df: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::all()
    }
}

impl FeatureConfig {
    pub const PRESETS: [&'static str; 5] = ["all", "without-regex", "only-regex", "only-semantic", "only-text"];

    fn none() -> Self {
        FeatureConfig {
            regex: false,
            keywords: false,
            tfidf: false,
            text: false,
            semantic: false,
            semantic_dims: false,
            metadata: false,
            tfidf_min_df: 1,
        }
    }

    pub fn all() -> Self {
        FeatureConfig {
            regex: true,
            keywords: true,
            tfidf: true,
            text: true,
            semantic: true,
            semantic_dims: true,
            metadata: true,
            tfidf_min_df: 1,
        }
    }

    /// Everything except the per-class regex counts.
    pub fn without_regex() -> Self {
        FeatureConfig { regex: false, ..Self::all() }
    }

    pub fn only_regex() -> Self {
        FeatureConfig { regex: true, ..Self::none() }
    }

    pub fn only_semantic() -> Self {
        FeatureConfig { semantic: true, semantic_dims: true, ..Self::none() }
    }

    pub fn only_text() -> Self {
        FeatureConfig { text: true, ..Self::none() }
    }

    /// Everything that does not need a document embedding model.
    pub fn without_embeddings(&self) -> Self {
        FeatureConfig { semantic: false, semantic_dims: false, ..self.clone() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "all" => Some(Self::all()),
            "without-regex" => Some(Self::without_regex()),
            "only-regex" => Some(Self::only_regex()),
            "only-semantic" => Some(Self::only_semantic()),
            "only-text" => Some(Self::only_text()),
            _ => None,
        }
    }

    pub fn enabled(&self, g: FeatureGroup) -> bool {
        match g {
            FeatureGroup::Regex => self.regex,
            FeatureGroup::Keywords => self.keywords,
            FeatureGroup::Tfidf => self.tfidf,
            FeatureGroup::Text => self.text,
            FeatureGroup::Semantic => self.semantic,
            FeatureGroup::SemanticDims => self.semantic_dims,
            FeatureGroup::Metadata => self.metadata,
        }
    }

    pub fn needs_doc_model(&self) -> bool {
        self.semantic || self.semantic_dims
    }
}

/// Frozen, ordered feature names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureRegistry {
    names: Vec<String>,
    index: HashMap<String, usize>,
    groups: Vec<(FeatureGroup, std::ops::Range<usize>)>,
    version: String,
}

impl FeatureRegistry {
    fn build(groups: Vec<(FeatureGroup, Vec<String>)>) -> Self {
        let mut names = Vec::new();
        let mut ranges = Vec::new();
        for (g, group_names) in groups {
            let start = names.len();
            names.extend(group_names);
            ranges.push((g, start..names.len()));
        }
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let version = registry_version(&names);
        FeatureRegistry { names, index, groups: ranges, version }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, col: usize) -> &str {
        &self.names[col]
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Hex digest of the ordered names.
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn group_range(&self, g: FeatureGroup) -> Option<std::ops::Range<usize>> {
        self.groups.iter().find(|(x, _)| *x == g).map(|(_, r)| r.clone())
    }
}

pub fn registry_version(names: &[String]) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Sparse feature row; columns refer to the registry named by `registry_version`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Sorted by column, no duplicates, finite values.
    pub values: Vec<(usize, f64)>,
    pub registry_version: String,
}

impl FeatureVector {
    pub fn new(mut values: Vec<(usize, f64)>, registry_version: String) -> Self {
        values.sort_by_key(|&(c, _)| c);
        debug_assert!(values.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(values.iter().all(|(_, v)| v.is_finite()));
        FeatureVector { values, registry_version }
    }

    pub fn get(&self, col: usize) -> f64 {
        self.values
            .binary_search_by_key(&col, |&(c, _)| c)
            .map_or(0.0, |i| self.values[i].1)
    }

    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(c, v) in &self.values {
            out[c] = v;
        }
        out
    }

    /// Non-zero entries keyed by feature name.
    pub fn named(&self, registry: &FeatureRegistry) -> BTreeMap<String, f64> {
        self.values
            .iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|&(c, v)| (registry.name(c).to_string(), v))
            .collect()
    }
}

/// Fitted models per group; `None` for groups that were not fitted.
#[derive(Debug, Clone, Default)]
pub struct FittedModels {
    pub patterns: Option<(Vec<KeywordSet>, Vec<(Addressee, String)>)>,
    pub keywords: Option<Vec<KeywordSet>>,
    pub tfidf: Option<TfidfModel>,
    pub lexicon: Option<SentimentLexicon>,
    pub doc_model: Option<Arc<DocEmbeddingModel>>,
    pub class_vectors: Option<Vec<ClassVector>>,
    pub departments: Option<Vec<String>>,
}

/// Inputs shared by every fit: keyword lists, lexicon, departments, the
/// stop-word list and an optional document embedding model.
#[derive(Debug, Clone)]
pub struct FeatureResources {
    pub keyword_sets: Vec<KeywordSet>,
    pub extra_patterns: Vec<(Addressee, String)>,
    pub lexicon: SentimentLexicon,
    pub departments: Vec<String>,
    pub stopwords: StopWords,
    pub doc_model: Option<Arc<DocEmbeddingModel>>,
}

impl Default for FeatureResources {
    fn default() -> Self {
        FeatureResources {
            keyword_sets: Addressee::ALL.iter().map(|&a| KeywordSet::default_for(a)).collect(),
            extra_patterns: Vec::new(),
            lexicon: SentimentLexicon::german(),
            departments: default_departments(),
            stopwords: StopWords::german(),
            doc_model: None,
        }
    }
}

impl FeatureResources {
    /// Fits tf-idf and class vectors on `train` only.
    pub fn fit(&self, config: &FeatureConfig, train: &LabeledDataset) -> Result<FeatureExtractor, FeatureError> {
        let pre = Preprocessor::new(self.stopwords.clone());
        let mut models = FittedModels {
            patterns: Some((self.keyword_sets.clone(), self.extra_patterns.clone())),
            keywords: Some(self.keyword_sets.clone()),
            lexicon: Some(self.lexicon.clone()),
            departments: Some(self.departments.clone()),
            doc_model: self.doc_model.clone(),
            ..FittedModels::default()
        };
        if config.tfidf {
            let streams: Vec<TokenStream> = train.comments().map(|c| pre.preprocess(c, true)).collect();
            models.tfidf = TfidfModel::fit(&streams, NgramRange::UnigramsAndBigrams, config.tfidf_min_df);
        }
        if config.semantic {
            if let Some(dm) = &self.doc_model {
                models.class_vectors = Some(class_vectors(dm, train, &pre)?);
            }
        }
        FeatureExtractor::new(config.clone(), self.stopwords.clone(), models)
    }
}

/// Turns comments into [`FeatureVector`]s.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    config: FeatureConfig,
    preprocessor: Preprocessor,
    keyword_sets: Vec<KeywordSet>,
    extra_patterns: Vec<(Addressee, String)>,
    patterns: Option<PatternSet>,
    matcher: Option<KeywordMatcher>,
    tfidf: Option<TfidfModel>,
    lexicon: SentimentLexicon,
    doc_model: Option<Arc<DocEmbeddingModel>>,
    class_vectors: Vec<ClassVector>,
    departments: Vec<String>,
    registry: FeatureRegistry,
}

impl FeatureExtractor {
    /// Fails if an enabled group lacks its fitted model.
    pub fn new(config: FeatureConfig, stopwords: StopWords, models: FittedModels) -> Result<Self, FeatureError> {
        let missing = |g: FeatureGroup| FeatureError::MissingModel(g);
        let mut groups: Vec<(FeatureGroup, Vec<String>)> = Vec::new();

        let (keyword_sets, extra_patterns) = models.patterns.clone().unwrap_or_default();
        let patterns = if config.regex {
            let (sets, extra) = models.patterns.as_ref().ok_or(missing(FeatureGroup::Regex))?;
            groups.push((
                FeatureGroup::Regex,
                Addressee::ALL.iter().map(|a| format!("regex_{}_matches", a.slug())).collect(),
            ));
            Some(PatternSet::compile(sets, extra)?)
        } else {
            None
        };
        let keyword_sets = models.keywords.clone().unwrap_or(keyword_sets);
        let matcher = if config.keywords {
            let sets = models.keywords.as_ref().ok_or(missing(FeatureGroup::Keywords))?;
            let m = KeywordMatcher::new(sets)?;
            groups.push((FeatureGroup::Keywords, m.keywords().iter().map(|k| format!("keyword_{k}")).collect()));
            Some(m)
        } else {
            None
        };
        let tfidf = if config.tfidf {
            let t = models.tfidf.clone().ok_or(missing(FeatureGroup::Tfidf))?;
            groups.push((FeatureGroup::Tfidf, t.terms().iter().map(|t| format!("tfidf_{t}")).collect()));
            Some(t)
        } else {
            None
        };
        let lexicon = models.lexicon.clone().unwrap_or_default();
        if config.text {
            models.lexicon.as_ref().ok_or(missing(FeatureGroup::Text))?;
            groups.push((FeatureGroup::Text, TEXT_STAT_NAMES.iter().map(|s| format!("text_{s}")).collect()));
        }
        let mut class_vectors = Vec::new();
        if config.semantic {
            models.doc_model.as_ref().ok_or(missing(FeatureGroup::Semantic))?;
            class_vectors = models.class_vectors.clone().ok_or(missing(FeatureGroup::Semantic))?;
            let mut names: Vec<String> = class_vectors.iter().map(|cv| format!("semantic_dist_{}", cv.class.slug())).collect();
            names.extend(class_vectors.iter().map(|cv| format!("semantic_min_dist_{}", cv.class.slug())));
            groups.push((FeatureGroup::Semantic, names));
        }
        if config.semantic_dims {
            let dm = models.doc_model.as_ref().ok_or(missing(FeatureGroup::SemanticDims))?;
            groups.push((FeatureGroup::SemanticDims, (0..dm.dim()).map(|i| format!("semantic_sem_{i}")).collect()));
        }
        let departments = models.departments.clone().unwrap_or_default();
        if config.metadata {
            let deps = models.departments.as_ref().ok_or(missing(FeatureGroup::Metadata))?;
            groups.push((FeatureGroup::Metadata, metadata_names(deps)));
        }
        Ok(FeatureExtractor {
            config,
            preprocessor: Preprocessor::new(stopwords),
            keyword_sets,
            extra_patterns,
            patterns,
            matcher,
            tfidf,
            lexicon,
            doc_model: models.doc_model,
            class_vectors,
            departments,
            registry: FeatureRegistry::build(groups),
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn registry(&self) -> &FeatureRegistry {
        &self.registry
    }

    pub fn preprocessor(&self) -> &Preprocessor {
        &self.preprocessor
    }

    pub fn keyword_sets(&self) -> &[KeywordSet] {
        &self.keyword_sets
    }

    pub fn patterns(&self) -> Option<&PatternSet> {
        self.patterns.as_ref()
    }

    pub fn class_vectors(&self) -> &[ClassVector] {
        &self.class_vectors
    }

    pub fn doc_model(&self) -> Option<&Arc<DocEmbeddingModel>> {
        self.doc_model.as_ref()
    }

    /// Pure function of the comment and the fitted models.
    pub fn assemble(&self, c: &Comment) -> Result<FeatureVector, FeatureError> {
        let reg = &self.registry;
        let mut values: Vec<(usize, f64)> = Vec::new();
        let start = |g| reg.group_range(g).map_or(0, |r| r.start);
        if let Some(p) = &self.patterns {
            let s = start(FeatureGroup::Regex);
            for (i, n) in p.count(c).into_iter().enumerate() {
                if n > 0 {
                    values.push((s + i, n as f64));
                }
            }
        }
        if let Some(m) = &self.matcher {
            let s = start(FeatureGroup::Keywords);
            values.extend(m.matches(c).into_iter().map(|i| (s + i, 1.0)));
        }
        let needs_tokens = self.tfidf.is_some() || self.config.needs_doc_model();
        let tokens = if needs_tokens { Some(self.preprocessor.preprocess(c, true)) } else { None };
        if let (Some(t), Some(ts)) = (&self.tfidf, &tokens) {
            let s = start(FeatureGroup::Tfidf);
            values.extend(t.transform(&ts.tokens).into_iter().map(|(i, v)| (s + i, v)));
        }
        if self.config.text {
            let s = start(FeatureGroup::Text);
            let stats = text_stats(c, &self.lexicon);
            for (i, v) in stats.values().into_iter().enumerate() {
                if v != 0.0 {
                    values.push((s + i, v));
                }
            }
        }
        if self.config.needs_doc_model() {
            let dm = self.doc_model.as_ref().ok_or(FeatureError::MissingModel(FeatureGroup::Semantic))?;
            let ts = tokens.as_ref().expect("tokens computed for semantic features");
            let w = dm.vector_for(ts).vector;
            if self.config.semantic {
                let s = start(FeatureGroup::Semantic);
                let f = semantic_features(&w, &self.class_vectors)?;
                let k = f.distances.len();
                for (i, (label, d)) in f.distances.iter().enumerate() {
                    if *d != 0.0 {
                        values.push((s + i, *d));
                    }
                    if *label == f.argmin {
                        values.push((s + k + i, 1.0));
                    }
                }
            }
            if self.config.semantic_dims {
                let s = start(FeatureGroup::SemanticDims);
                values.extend(w.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (s + i, v)));
            }
        }
        if self.config.metadata {
            let s = start(FeatureGroup::Metadata);
            values.extend(metadata_features(c, &self.departments).into_iter().map(|(i, v)| (s + i, v)));
        }
        Ok(FeatureVector::new(values, reg.version().to_string()))
    }

    pub fn assemble_all<'a, I>(&self, comments: I) -> Result<Vec<FeatureVector>, FeatureError>
    where
        I: IntoParallelIterator<Item = &'a Comment>,
    {
        comments.into_par_iter().map(|c| self.assemble(c)).collect()
    }

    pub fn assemble_dataset(&self, ds: &LabeledDataset) -> Result<Vec<FeatureVector>, FeatureError> {
        let comments: Vec<&Comment> = ds.comments().collect();
        self.assemble_all(comments)
    }

    /// Serializable snapshot; the document model is stored separately.
    pub fn state(&self) -> ExtractorState {
        ExtractorState {
            config: self.config.clone(),
            stopwords: self.preprocessor.stopwords().sorted(),
            keyword_sets: self.keyword_sets.clone(),
            extra_patterns: self.extra_patterns.clone(),
            tfidf: self.tfidf.clone(),
            lexicon: self.lexicon.clone(),
            class_vectors: self.class_vectors.clone(),
            departments: self.departments.clone(),
            registry_version: self.registry.version().to_string(),
            n_features: self.registry.len(),
        }
    }

    /// Rebuilds an extractor; the registry must reproduce the stored version.
    pub fn from_state(state: ExtractorState, doc_model: Option<Arc<DocEmbeddingModel>>) -> Result<Self, FeatureError> {
        let mut tfidf = state.tfidf;
        if let Some(t) = tfidf.as_mut() {
            t.rebuild_index();
        }
        let models = FittedModels {
            patterns: Some((state.keyword_sets.clone(), state.extra_patterns)),
            keywords: Some(state.keyword_sets),
            tfidf,
            lexicon: Some(state.lexicon),
            doc_model,
            class_vectors: if state.config.semantic { Some(state.class_vectors) } else { None },
            departments: Some(state.departments),
        };
        let ex = FeatureExtractor::new(state.config, StopWords::from_words(state.stopwords), models)?;
        if ex.registry.version() != state.registry_version {
            return Err(FeatureError::RegistryMismatch {
                expected: state.registry_version,
                found: ex.registry.version().to_string(),
            });
        }
        Ok(ex)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorState {
    pub config: FeatureConfig,
    pub stopwords: Vec<String>,
    pub keyword_sets: Vec<KeywordSet>,
    pub extra_patterns: Vec<(Addressee, String)>,
    pub tfidf: Option<TfidfModel>,
    pub lexicon: SentimentLexicon,
    pub class_vectors: Vec<ClassVector>,
    pub departments: Vec<String>,
    pub registry_version: String,
    pub n_features: usize,
}

/// Writes `row col value` triplets to `path` and one name per line to `path.names`.
pub fn write_feature_matrix(path: &Path, rows: &[FeatureVector], registry: &FeatureRegistry) -> Result<(), FeatureError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# registry {} rows {} cols {}", registry.version(), rows.len(), registry.len())?;
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in &row.values {
            writeln!(w, "{r} {c} {v}")?;
        }
    }
    w.flush()?;
    let mut n = BufWriter::new(fs::File::create(names_path(path))?);
    for name in registry.names() {
        writeln!(n, "{name}")?;
    }
    n.flush()?;
    Ok(())
}

pub fn names_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".names");
    PathBuf::from(s)
}

/// Reads a matrix written by [`write_feature_matrix`]: rows and names.
pub fn read_feature_matrix(path: &Path) -> Result<(Vec<FeatureVector>, Vec<String>), FeatureError> {
    let names: Vec<String> = fs::read_to_string(names_path(path))?.lines().map(str::to_string).collect();
    let version = registry_version(&names);
    let bad = |line: usize, message: String| FeatureError::Format { path: path.to_path_buf(), line, message };
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if let Some(header) = line.strip_prefix('#') {
            let mut it = header.split_whitespace();
            while let Some(key) = it.next() {
                let val = it.next().unwrap_or("");
                match key {
                    "registry" if val != version => {
                        return Err(FeatureError::RegistryMismatch { expected: val.to_string(), found: version.clone() })
                    }
                    "rows" => {
                        let n: usize = val.parse().map_err(|_| bad(i + 1, "bad row count".into()))?;
                        rows.resize(n, Vec::new());
                    }
                    _ => {}
                }
            }
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(bad(i + 1, "expected `row col value`".into()));
        }
        let r: usize = parts[0].parse().map_err(|_| bad(i + 1, "row".into()))?;
        let c: usize = parts[1].parse().map_err(|_| bad(i + 1, "col".into()))?;
        let v: f64 = parts[2].parse().map_err(|_| bad(i + 1, "value".into()))?;
        if c >= names.len() || !v.is_finite() {
            return Err(bad(i + 1, format!("column {c} or value {v} out of range")));
        }
        if r >= rows.len() {
            rows.resize(r + 1, Vec::new());
        }
        rows[r].push((c, v));
    }
    Ok((rows.into_iter().map(|v| FeatureVector::new(v, version.clone())).collect(), names))
}
