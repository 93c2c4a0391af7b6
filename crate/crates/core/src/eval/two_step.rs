//! Meta detection followed by one-vs-all addressee classification.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::pipeline::TraditionalPipeline;
use super::{cv::labeled, EvalError, Target};
use crate::classifiers::TrainedModel;
use crate::corpus::{Addressee, Comment, LabeledDataset};
use crate::embeddings::DocEmbeddingModel;
use crate::features::{ExtractorState, FeatureExtractor, FeatureVector};
use crate::seed;

pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepOutput {
    pub meta: bool,
    pub addressees: Vec<Addressee>,
    /// Calibrated confidence of step 1, when the meta model is calibrated.
    pub meta_confidence: Option<f64>,
    /// Step-2 confidences; empty when step 1 says non-meta.
    pub confidences: Vec<(Addressee, f64)>,
}

/// Step 1 gates step 2: a non-meta prediction yields no addressees. An
/// addressee is assigned when its calibrated confidence is strictly greater
/// than `threshold`.
pub fn two_step_classify(
    meta: &TrainedModel,
    addressees: &[(Addressee, TrainedModel)],
    v: &FeatureVector,
    threshold: f64,
) -> Result<TwoStepOutput, EvalError> {
    for m in std::iter::once(meta).chain(addressees.iter().map(|(_, m)| m)) {
        if m.registry_version != v.registry_version {
            return Err(EvalError::RegistryMismatch {
                expected: m.registry_version.clone(),
                found: v.registry_version.clone(),
            });
        }
    }
    let is_meta = meta.predict(v)?;
    let meta_confidence = meta.calibration.map(|_| meta.confidence(v)).transpose()?;
    if !is_meta {
        return Ok(TwoStepOutput { meta: false, addressees: Vec::new(), meta_confidence, confidences: Vec::new() });
    }
    let mut out = TwoStepOutput { meta: true, addressees: Vec::new(), meta_confidence, confidences: Vec::new() };
    for (a, m) in addressees {
        let c = m.confidence(v)?;
        out.confidences.push((*a, c));
        if c > threshold {
            out.addressees.push(*a);
        }
    }
    Ok(out)
}

/// The four binary models over one shared feature extractor.
#[derive(Debug, Clone)]
pub struct TwoStepModel {
    pub extractor: FeatureExtractor,
    pub meta: TrainedModel,
    pub addressees: Vec<(Addressee, TrainedModel)>,
    pub threshold: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TwoStepManifest {
    threshold: f64,
    addressees: Vec<Addressee>,
}

impl TwoStepModel {
    /// Fits the extractor once on the labeled part of `train`, then the meta
    /// model and one calibrated one-vs-all model per addressee. Addressee
    /// negatives are all other labeled comments, non-meta included.
    pub fn fit(pipeline: &TraditionalPipeline, train: &LabeledDataset, seed: u64, threshold: f64) -> Result<Self, EvalError> {
        let train = labeled(train);
        let extractor = pipeline.resources.fit(&pipeline.features, &train)?;
        let x = extractor.assemble_dataset(&train)?;
        let fit_target = |t: Target| -> Result<TrainedModel, EvalError> {
            let s = seed::derive_seed(seed, &format!("two-step/{}", t.name()));
            let y = t.labels(&train);
            let (mut m, _) = pipeline.train_on(&extractor, &x, &y, s)?;
            let values = pipeline.inner_decision_values(&train, t, s)?;
            m.calibrate_with_values(&values, &y)?;
            Ok(m)
        };
        let meta = fit_target(Target::Meta)?;
        let addressees = Addressee::ALL
            .iter()
            .map(|&a| Ok((a, fit_target(Target::Addressee(a))?)))
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(TwoStepModel { extractor, meta, addressees, threshold })
    }

    pub fn classify(&self, c: &Comment) -> Result<TwoStepOutput, EvalError> {
        let v = self.extractor.assemble(c)?;
        two_step_classify(&self.meta, &self.addressees, &v, self.threshold)
    }

    /// Writes `extractor.json`, `meta.json`, one `<addressee>.json` per class
    /// and `two_step.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), EvalError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("extractor.json"), serde_json::to_string_pretty(&self.extractor.state())?)?;
        self.meta.save(&dir.join("meta.json"))?;
        for (a, m) in &self.addressees {
            m.save(&dir.join(format!("{}.json", a.slug())))?;
        }
        let manifest = TwoStepManifest { threshold: self.threshold, addressees: self.addressees.iter().map(|p| p.0).collect() };
        fs::write(dir.join("two_step.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path, doc_model: Option<Arc<DocEmbeddingModel>>) -> Result<Self, EvalError> {
        let state: ExtractorState = serde_json::from_str(&fs::read_to_string(dir.join("extractor.json"))?)?;
        let extractor = FeatureExtractor::from_state(state, doc_model)?;
        let version = extractor.registry().version().to_string();
        let manifest: TwoStepManifest = serde_json::from_str(&fs::read_to_string(dir.join("two_step.json"))?)?;
        let meta = TrainedModel::load(&dir.join("meta.json"), &version)?;
        let addressees = manifest
            .addressees
            .iter()
            .map(|&a| Ok((a, TrainedModel::load(&dir.join(format!("{}.json", a.slug())), &version)?)))
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(TwoStepModel { extractor, meta, addressees, threshold: manifest.threshold })
    }
}
