//! Binary classifiers over feature vectors: linear SVM, decision tree,
//! random forest, AdaBoost and k-NN, with optional sigmoid calibration.
//!
//! Every model exposes a decision value whose sign is the prediction; zero
//! counts as positive.

pub mod calibration;
pub mod knn;
pub mod matrix;
pub mod svm;
pub mod tree;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

pub use calibration::Platt;
pub use knn::{Knn, KnnParams};
pub use matrix::{ColumnMap, Matrix, Standardizer};
pub use svm::{SvmParams, SvmSolution};
pub use tree::{AdaBoostParams, Boosted, Forest, ForestParams, Tree, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("empty training matrix")]
    Empty,
    #[error("label count {labels} does not match row count {rows}")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("feature registry mismatch: model expects {expected}, got {found}")]
    RegistryMismatch { expected: String, found: String },
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("calibration holdout must contain both classes")]
    DegenerateHoldout,
    #[error("model is not calibrated")]
    NotCalibrated,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LinearSvm,
    DecisionTree,
    RandomForest,
    AdaBoost,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::LinearSvm,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::AdaBoost,
        ClassifierKind::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::AdaBoost => "adaboost",
            ClassifierKind::Knn => "knn",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        let alias = match norm.as_str() {
            "svm" => "linear_svm",
            "tree" => "decision_tree",
            "forest" => "random_forest",
            other => other,
        };
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == alias)
            .ok_or_else(|| format!("unknown classifier {s:?}"))
    }
}

/// Hyperparameters, tagged by classifier kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierParams {
    LinearSvm(SvmParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    AdaBoost(AdaBoostParams),
    Knn(KnnParams),
}

impl ClassifierParams {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::LinearSvm => ClassifierParams::LinearSvm(SvmParams::default()),
            ClassifierKind::DecisionTree => ClassifierParams::DecisionTree(TreeParams::default()),
            ClassifierKind::RandomForest => ClassifierParams::RandomForest(ForestParams::default()),
            ClassifierKind::AdaBoost => ClassifierParams::AdaBoost(AdaBoostParams::default()),
            ClassifierKind::Knn => ClassifierParams::Knn(KnnParams::default()),
        }
    }

    pub fn svm(c: f64) -> Self {
        ClassifierParams::LinearSvm(SvmParams { c, ..SvmParams::default() })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierParams::LinearSvm(_) => ClassifierKind::LinearSvm,
            ClassifierParams::DecisionTree(_) => ClassifierKind::DecisionTree,
            ClassifierParams::RandomForest(_) => ClassifierKind::RandomForest,
            ClassifierParams::AdaBoost(_) => ClassifierKind::AdaBoost,
            ClassifierParams::Knn(_) => ClassifierKind::Knn,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidParams(m.to_string()));
        match self {
            ClassifierParams::LinearSvm(p) if !(p.c > 0.0 && p.c.is_finite()) => bad("C must be positive"),
            ClassifierParams::LinearSvm(p) if !(p.tolerance > 0.0) => bad("tolerance must be positive"),
            ClassifierParams::RandomForest(p) if p.n_trees == 0 => bad("n_trees must be at least 1"),
            ClassifierParams::AdaBoost(p) if p.n_estimators == 0 || !(p.learning_rate > 0.0) => {
                bad("n_estimators and learning_rate must be positive")
            }
            ClassifierParams::Knn(p) if p.k == 0 => bad("k must be at least 1"),
            _ => Ok(()),
        }
    }

    /// Same hyperparameters with the random seed replaced (kinds without
    /// randomness are unchanged).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut p = self.clone();
        match &mut p {
            ClassifierParams::LinearSvm(s) => s.seed = seed,
            ClassifierParams::RandomForest(f) => f.seed = seed,
            _ => {}
        }
        p
    }

    /// Short label for score tables, e.g. `C=0.5`.
    pub fn describe(&self) -> String {
        match self {
            ClassifierParams::LinearSvm(p) => format!("C={}", p.c),
            ClassifierParams::DecisionTree(p) => format!("max_depth={} min_leaf={}", p.max_depth, p.min_leaf),
            ClassifierParams::RandomForest(p) => {
                format!("n_trees={} max_depth={} min_leaf={}", p.n_trees, p.max_depth, p.min_leaf)
            }
            ClassifierParams::AdaBoost(p) => format!("n_estimators={} learning_rate={}", p.n_estimators, p.learning_rate),
            ClassifierParams::Knn(p) => format!("k={}", p.k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelBody {
    /// `weights·x + bias` over raw (unstandardized) model columns.
    Linear { weights: Vec<f64>, bias: f64 },
    Tree(Tree),
    Forest(Forest),
    Boosted(Boosted),
    Knn(Knn),
}

/// A trained binary classifier bound to one feature registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub params: ClassifierParams,
    pub registry_version: String,
    pub columns: ColumnMap,
    pub standardizer: Option<Standardizer>,
    pub body: ModelBody,
    pub calibration: Option<Platt>,
}

fn check_training(x: &[FeatureVector], y: &[bool]) -> Result<(), ClassifierError> {
    if x.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch { rows: x.len(), labels: y.len() });
    }
    let pos = y.iter().filter(|&&l| l).count();
    if pos == 0 || pos == y.len() {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

/// Trains on the registry columns in `columns`.
pub fn train(
    params: &ClassifierParams,
    x: &[FeatureVector],
    y: &[bool],
    registry_version: &str,
    columns: ColumnMap,
) -> Result<TrainedModel, ClassifierError> {
    params.validate()?;
    check_training(x, y)?;
    if let Some(v) = x.iter().find(|v| v.registry_version != registry_version) {
        return Err(ClassifierError::RegistryMismatch {
            expected: registry_version.to_string(),
            found: v.registry_version.clone(),
        });
    }
    // Canonical row order so that no result depends on the input order.
    let raw = Matrix::from_features(x, &columns);
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].cmp(&y[b]).then_with(|| raw.row(a).total_cmp(&raw.row(b))));
    let m = raw.select_rows(&order);
    let y: Vec<bool> = order.iter().map(|&i| y[i]).collect();
    let y = y.as_slice();
    let (body, standardizer) = match params {
        ClassifierParams::LinearSvm(p) => {
            let st = if p.standardize { Standardizer::fit(&m) } else { Standardizer::identity(m.n_cols()) };
            let s = st.inv_std();
            let z = m.scale_columns(&s);
            let center: Vec<f64> = st.mean.iter().zip(&s).map(|(a, b)| a * b).collect();
            let sol = svm::solve(&z, &center, y, p);
            if !sol.converged {
                log::warn!("svm stopped after {} iterations without reaching tolerance {}", sol.iterations, p.tolerance);
            }
            let weights: Vec<f64> = sol.weights.iter().zip(&s).map(|(w, s)| w * s).collect();
            (ModelBody::Linear { weights, bias: sol.bias }, Some(st))
        }
        ClassifierParams::DecisionTree(p) => (ModelBody::Tree(tree::train_tree(&m, y, p)), None),
        ClassifierParams::RandomForest(p) => (ModelBody::Forest(tree::train_forest(&m, y, p)), None),
        ClassifierParams::AdaBoost(p) => (ModelBody::Boosted(tree::train_adaboost(&m, y, p)), None),
        ClassifierParams::Knn(p) => {
            let st = if p.standardize { Standardizer::fit(&m) } else { Standardizer::identity(m.n_cols()) };
            (ModelBody::Knn(Knn::fit(&m, y, p.k, st.inv_std())), Some(st))
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        params: params.clone(),
        registry_version: registry_version.to_string(),
        columns,
        standardizer,
        body,
        calibration: None,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }

    fn check(&self, v: &FeatureVector) -> Result<(), ClassifierError> {
        if v.registry_version != self.registry_version {
            return Err(ClassifierError::RegistryMismatch {
                expected: self.registry_version.clone(),
                found: v.registry_version.clone(),
            });
        }
        Ok(())
    }

    pub fn decision_value(&self, v: &FeatureVector) -> Result<f64, ClassifierError> {
        self.check(v)?;
        let x = self.columns.project_row(v);
        Ok(match &self.body {
            ModelBody::Linear { weights, bias } => x.iter().map(|&(c, v)| weights[c] * v).sum::<f64>() + bias,
            ModelBody::Tree(t) => t.decision_value(&x),
            ModelBody::Forest(f) => f.decision_value(&x),
            ModelBody::Boosted(b) => b.decision_value(&x),
            ModelBody::Knn(k) => k.decision_value(&x),
        })
    }

    /// Zero decision value counts as positive.
    pub fn predict(&self, v: &FeatureVector) -> Result<bool, ClassifierError> {
        Ok(self.decision_value(v)? >= 0.0)
    }

    /// Fits the sigmoid on held-out rows.
    pub fn calibrate(&mut self, x: &[FeatureVector], y: &[bool]) -> Result<(), ClassifierError> {
        let f = x.iter().map(|v| self.decision_value(v)).collect::<Result<Vec<_>, _>>()?;
        self.calibration = Some(Platt::fit(&f, y)?);
        Ok(())
    }

    pub fn calibrate_with_values(&mut self, decision: &[f64], y: &[bool]) -> Result<(), ClassifierError> {
        self.calibration = Some(Platt::fit(decision, y)?);
        Ok(())
    }

    pub fn confidence(&self, v: &FeatureVector) -> Result<f64, ClassifierError> {
        let p = self.calibration.ok_or(ClassifierError::NotCalibrated)?;
        Ok(p.confidence(self.decision_value(v)?))
    }

    /// Linear weights per registry column (SVM only).
    pub fn linear_weights(&self) -> Option<Vec<(usize, f64)>> {
        match &self.body {
            ModelBody::Linear { weights, .. } => Some(self.columns.columns().iter().copied().zip(weights.iter().copied()).collect()),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ClassifierError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let h: Header = serde_json::from_str(s)?;
        if h.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::UnsupportedVersion(h.format_version));
        }
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Loads a model and checks it against the registry in use.
    pub fn load(path: &Path, registry_version: &str) -> Result<Self, ClassifierError> {
        let m = Self::from_json(&fs::read_to_string(path)?)?;
        if m.registry_version != registry_version {
            return Err(ClassifierError::RegistryMismatch {
                expected: m.registry_version,
                found: registry_version.to_string(),
            });
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests;
