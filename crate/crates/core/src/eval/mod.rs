//! Metrics, stratified cross-validation, grid search, the two-step
//! meta/addressee classifier and cross-dataset evaluation.

pub mod cv;
pub mod folds;
pub mod metrics;
pub mod pipeline;
pub mod two_step;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::corpus::{Addressee, LabelSet, LabeledDataset};
use crate::features::FeatureError;
use crate::neural::NeuralError;

pub use cv::{cross_dataset_eval, cross_validate, grid_search, labeled, ClassifierGrid, CvResult, GridResult, GridRow, GridSpec};
pub use folds::{stratified_k_fold, Fold};
pub use metrics::{f_beta, Metrics};
pub use pipeline::{CnnPipeline, FitContext, Pipeline, TraditionalModel, TraditionalPipeline};
pub use two_step::{two_step_classify, TwoStepModel, TwoStepOutput, DEFAULT_THRESHOLD};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("class {class} has {count} members, fewer than k = {k}")]
    ClassTooSmall { class: String, count: usize, k: usize },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("fold {fold}: pipeline fitted on comment `{id}` outside the training fold")]
    Leak { fold: usize, id: String },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("registry mismatch: expected {expected}, found {found}")]
    RegistryMismatch { expected: String, found: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A binary task: meta vs non-meta, or one addressee against all other
/// labeled comments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Target {
    Meta,
    Addressee(Addressee),
}

impl Target {
    pub const ALL: [Target; 4] = [
        Target::Meta,
        Target::Addressee(Addressee::Media),
        Target::Addressee(Addressee::Journalist),
        Target::Addressee(Addressee::Moderator),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Meta => "Meta",
            Target::Addressee(a) => a.label().as_str(),
        }
    }

    /// Comments that take part in training and evaluation.
    pub fn is_labeled(ls: LabelSet) -> bool {
        ls.is_meta() || ls.is_non_meta()
    }

    pub fn label(self, ls: LabelSet) -> bool {
        match self {
            Target::Meta => ls.is_meta(),
            Target::Addressee(a) => ls.contains(a.label()),
        }
    }

    pub fn labels(self, ds: &LabeledDataset) -> Vec<bool> {
        ds.entries.iter().map(|e| self.label(e.labels)).collect()
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Target::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown target {s:?}; expected Meta, Media, Journalist or Moderator"))
    }
}
