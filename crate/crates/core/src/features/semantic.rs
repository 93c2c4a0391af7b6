//! Class vectors and the distance-to-class features.

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::corpus::{Label, LabelSet, LabeledDataset};
use crate::embeddings::{cosine_distance, DocEmbeddingModel};
use crate::textprep::Preprocessor;

/// Mean document vector of a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVector {
    pub class: Label,
    pub vector: Vec<f64>,
}

/// One class vector per label, in `Label::ALL` order.
pub fn class_vectors_from(labels: &[LabelSet], vectors: &[Vec<f64>], dim: usize) -> Result<Vec<ClassVector>, FeatureError> {
    Label::ALL
        .iter()
        .map(|&class| {
            let mut sum = vec![0.0; dim];
            let mut n = 0usize;
            for (ls, v) in labels.iter().zip(vectors) {
                if ls.contains(class) {
                    if v.len() != dim {
                        return Err(FeatureError::DimensionMismatch { expected: dim, found: v.len() });
                    }
                    sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                    n += 1;
                }
            }
            if n == 0 {
                return Err(FeatureError::EmptyClass(class));
            }
            sum.iter_mut().for_each(|s| *s /= n as f64);
            Ok(ClassVector { class, vector: sum })
        })
        .collect()
}

/// Class vectors from the document vectors of `ds`'s comments.
pub fn class_vectors(dm: &DocEmbeddingModel, ds: &LabeledDataset, pre: &Preprocessor) -> Result<Vec<ClassVector>, FeatureError> {
    let labels: Vec<LabelSet> = ds.entries.iter().map(|e| e.labels).collect();
    let vectors: Vec<Vec<f64>> = ds
        .entries
        .iter()
        .map(|e| dm.vector_for(&pre.preprocess(&e.comment, true)).vector)
        .collect();
    class_vectors_from(&labels, &vectors, dm.dim())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticFeatures {
    /// Cosine distance to each class vector, in class-vector order.
    pub distances: Vec<(Label, f64)>,
    pub argmin: Label,
}

/// Distances to every class vector; ties go to the earlier class vector.
pub fn semantic_features(doc_vector: &[f64], cvs: &[ClassVector]) -> Result<SemanticFeatures, FeatureError> {
    let mut distances = Vec::with_capacity(cvs.len());
    let mut best: Option<(Label, f64)> = None;
    for cv in cvs {
        let d = cosine_distance(doc_vector, &cv.vector)
            .map_err(|_| FeatureError::DimensionMismatch { expected: cv.vector.len(), found: doc_vector.len() })?;
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((cv.class, d));
        }
        distances.push((cv.class, d));
    }
    let argmin = best.map(|(l, _)| l).ok_or(FeatureError::EmptyClass(Label::Media))?;
    Ok(SemanticFeatures { distances, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Addressee;

    fn cv(class: Label, v: &[f64]) -> ClassVector {
        ClassVector { class, vector: v.to_vec() }
    }

    fn all_labels() -> Vec<LabelSet> {
        vec![
            LabelSet::meta(&[Addressee::Media, Addressee::Journalist, Addressee::Moderator]),
            LabelSet::non_meta(),
        ]
    }

    #[test]
    fn class_vector_is_member_mean() {
        let mut labels = all_labels();
        let mut vectors = vec![vec![7.0, 7.0], vec![1.0, 1.0]];
        let extra = [vec![2.0, 2.0], vec![4.0, 6.0], vec![0.0, 1.0]];
        for v in extra {
            labels.push(LabelSet::meta(&[Addressee::Media]));
            vectors.push(v);
        }
        let cvs = class_vectors_from(&labels, &vectors, 2).unwrap();
        let order: Vec<Label> = cvs.iter().map(|c| c.class).collect();
        assert_eq!(order, Label::ALL.to_vec());
        // Media: (7,7),(2,2),(4,6),(0,1) → (13/4, 16/4)
        assert_eq!(cvs[0].vector, vec![13.0 / 4.0, 4.0]);
        assert_eq!(cvs[4].vector, vec![1.0, 1.0]);
    }

    #[test]
    fn hand_means() {
        let only_non_meta = vec![LabelSet::non_meta(); 3];
        let vectors = vec![vec![2.0, 2.0], vec![4.0, 6.0], vec![0.0, 1.0]];
        assert!(matches!(
            class_vectors_from(&only_non_meta, &vectors, 2),
            Err(FeatureError::EmptyClass(Label::Media))
        ));

        let mut labels = all_labels();
        labels.extend([LabelSet::non_meta(), LabelSet::non_meta()]);
        let vectors = vec![vec![1.0, 0.0], vec![2.0, 2.0], vec![4.0, 6.0], vec![0.0, 1.0]];
        let cvs = class_vectors_from(&labels, &vectors, 2).unwrap();
        assert_eq!(cvs[0].vector, vec![1.0, 0.0]);
        assert_eq!(cvs[4].vector, vec![2.0, 3.0]);
    }

    #[test]
    fn two_member_symmetry() {
        let labels = vec![LabelSet::meta(&Addressee::ALL), LabelSet::meta(&Addressee::ALL), LabelSet::non_meta()];
        let vectors = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![3.0, 3.0]];
        let cvs = class_vectors_from(&labels, &vectors, 2).unwrap();
        assert_eq!(cvs[3].vector, vec![0.5, 0.5]);
    }

    #[test]
    fn distance_and_argmin() {
        let cvs = vec![cv(Label::Media, &[1.0, 0.0]), cv(Label::Journalist, &[0.0, 1.0])];
        let f = semantic_features(&[1.0, 0.0], &cvs).unwrap();
        assert_eq!(f.distances, vec![(Label::Media, 0.0), (Label::Journalist, 1.0)]);
        assert_eq!(f.argmin, Label::Media);
    }

    #[test]
    fn ties_go_to_first_class() {
        let cvs: Vec<ClassVector> = Label::ALL.iter().map(|&l| cv(l, &[1.0, 1.0])).collect();
        assert_eq!(semantic_features(&[1.0, 0.0], &cvs).unwrap().argmin, Label::Media);
        let cvs = vec![
            cv(Label::Media, &[0.0, 1.0]),
            cv(Label::Meta, &[1.0, 0.0]),
            cv(Label::NonMeta, &[2.0, 0.0]),
        ];
        assert_eq!(semantic_features(&[1.0, 0.0], &cvs).unwrap().argmin, Label::Meta);
    }
}
