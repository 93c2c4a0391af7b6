//! Stratified k-fold splits.

use std::collections::BTreeMap;
use std::fmt::Debug;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Sorted ascending.
    pub train: Vec<usize>,
    /// Sorted ascending.
    pub test: Vec<usize>,
}

/// Each class's indices are shuffled and dealt round-robin to the folds. The
/// dealing position carries over from one class to the next (classes in
/// ascending order), so fold sizes differ by at most one.
pub fn stratified_k_fold<L: Ord + Clone + Debug>(y: &[L], k: usize, seed: u64) -> Result<Vec<Fold>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    let mut classes: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in y.iter().enumerate() {
        classes.entry(l).or_default().push(i);
    }
    if let Some((l, members)) = classes.iter().find(|(_, m)| m.len() < k) {
        return Err(EvalError::ClassTooSmall { class: format!("{l:?}"), count: members.len(), k });
    }
    let mut rng = seed::rng(seed::derive_seed(seed, "stratified-k-fold"));
    let mut assignment = vec![0; y.len()];
    let mut next = 0;
    for members in classes.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}
