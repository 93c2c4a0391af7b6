//! Gini decision trees on sparse rows, bootstrap forests and SAMME boosting
//! over depth-1 stumps.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Row};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum number of training rows in every leaf.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 20, min_leaf: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 20,
            min_leaf: 2,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_estimators: 50,
            learning_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Weighted fraction of positive rows.
        p: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn probability(&self, x: &[(usize, f64)]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { p } => return *p,
                Node::Split { feature, threshold, left, right } => {
                    let v = x
                        .binary_search_by_key(feature, |&(c, _)| c)
                        .map_or(0.0, |i| x[i].1);
                    at = if v <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// `p − ½`; non-negative means positive.
    pub fn decision_value(&self, x: &[(usize, f64)]) -> f64 {
        self.probability(x) - 0.5
    }

    pub fn depth(&self) -> usize {
        fn d(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(t, *left).max(d(t, *right)),
            }
        }
        d(self, 0)
    }
}

/// Subsampling of candidate features per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    All,
    Sqrt,
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [bool],
    w: &'a [f64],
    params: &'a TreeParams,
    max_features: MaxFeatures,
    rng: Option<ChaCha8Rng>,
    nodes: Vec<Node>,
    candidate: Vec<bool>,
}

#[derive(Clone, Copy, Default)]
struct Tally {
    pos: f64,
    neg: f64,
    count: usize,
}

impl Tally {
    fn add(&mut self, y: bool, w: f64) {
        if y {
            self.pos += w;
        } else {
            self.neg += w;
        }
        self.count += 1;
    }

    fn minus(self, o: Tally) -> Tally {
        Tally {
            pos: self.pos - o.pos,
            neg: self.neg - o.neg,
            count: self.count - o.count,
        }
    }

    fn total(&self) -> f64 {
        self.pos + self.neg
    }

    /// Weight times Gini impurity.
    fn weighted_gini(&self) -> f64 {
        let t = self.total();
        if t <= 0.0 {
            0.0
        } else {
            t - (self.pos * self.pos + self.neg * self.neg) / t
        }
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Grower<'_> {
    fn tally(&self, rows: &[usize]) -> Tally {
        let mut t = Tally::default();
        for &r in rows {
            t.add(self.y[r], self.w[r]);
        }
        t
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let t = self.tally(&rows);
        let p = if t.total() > 0.0 { t.pos / t.total() } else { 0.5 };
        self.nodes.push(Node::Leaf { p });
        if depth >= self.params.max_depth
            || rows.len() < 2 * self.params.min_leaf.max(1)
            || t.pos <= 0.0
            || t.neg <= 0.0
        {
            return id;
        }
        let Some(split) = self.best_split(&rows, t) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| {
            let row = self.x.row(i);
            value(&row, split.feature) <= split.threshold
        });
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn draw_candidates(&mut self) {
        let d = self.x.n_cols();
        match (self.max_features, self.rng.as_mut()) {
            (MaxFeatures::Sqrt, Some(rng)) => {
                self.candidate.iter_mut().for_each(|c| *c = false);
                let k = ((d as f64).sqrt().round() as usize).clamp(1, d.max(1));
                for f in sample(rng, d, k.min(d)) {
                    self.candidate[f] = true;
                }
            }
            _ => self.candidate.iter_mut().for_each(|c| *c = true),
        }
    }

    fn best_split(&mut self, rows: &[usize], total: Tally) -> Option<Split> {
        self.draw_candidates();
        // Non-zero entries of the node grouped by feature.
        let mut entries: Vec<(u32, f64, usize)> = Vec::new();
        for &r in rows {
            let row = self.x.row(r);
            for (c, v) in row.iter() {
                if self.candidate[c] {
                    entries.push((c as u32, v, r));
                }
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        let parent = total.weighted_gini();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Split> = None;
        let mut start = 0;
        while start < entries.len() {
            let f = entries[start].0;
            let mut end = start;
            while end < entries.len() && entries[end].0 == f {
                end += 1;
            }
            let group = &entries[start..end];
            start = end;
            // Implicit zeros form one block between the negative and positive values.
            let mut nonzero = Tally::default();
            for &(_, _, r) in group {
                nonzero.add(self.y[r], self.w[r]);
            }
            let zeros = total.minus(nonzero);
            let neg_end = group.partition_point(|e| e.1 < 0.0);
            let mut blocks: Vec<(f64, Tally)> = Vec::new();
            let push = |v: f64, y: bool, w: f64, blocks: &mut Vec<(f64, Tally)>| match blocks.last_mut() {
                Some((bv, t)) if *bv == v => t.add(y, w),
                _ => {
                    let mut t = Tally::default();
                    t.add(y, w);
                    blocks.push((v, t));
                }
            };
            for &(_, v, r) in &group[..neg_end] {
                push(v, self.y[r], self.w[r], &mut blocks);
            }
            if zeros.count > 0 {
                blocks.push((0.0, zeros));
            }
            for &(_, v, r) in &group[neg_end..] {
                push(v, self.y[r], self.w[r], &mut blocks);
            }
            let mut left = Tally::default();
            for k in 0..blocks.len().saturating_sub(1) {
                let b = blocks[k].1;
                left = Tally {
                    pos: left.pos + b.pos,
                    neg: left.neg + b.neg,
                    count: left.count + b.count,
                };
                let right = total.minus(left);
                if left.count < min_leaf || right.count < min_leaf {
                    continue;
                }
                let impurity = left.weighted_gini() + right.weighted_gini();
                // Zero-gain splits are allowed (needed for XOR-like data).
                if impurity <= parent + 1e-12 && best.as_ref().is_none_or(|s| impurity < s.impurity - 1e-12) {
                    let (a, c) = (blocks[k].0, blocks[k + 1].0);
                    let mid = a + (c - a) / 2.0;
                    best = Some(Split {
                        feature: f as usize,
                        threshold: if mid < c { mid } else { a },
                        impurity,
                    });
                }
            }
        }
        best
    }
}

fn value(row: &Row<'_>, feature: usize) -> f64 {
    row.indices
        .binary_search(&(feature as u32))
        .map_or(0.0, |i| row.values[i])
}

/// Grows a tree on `rows` (repeats allowed) with per-row weights `w`.
pub fn fit_tree(
    x: &Matrix,
    y: &[bool],
    w: &[f64],
    rows: Vec<usize>,
    params: &TreeParams,
    max_features: MaxFeatures,
    rng: Option<ChaCha8Rng>,
) -> Tree {
    let mut g = Grower {
        x,
        y,
        w,
        params,
        max_features,
        rng,
        nodes: Vec::new(),
        candidate: vec![true; x.n_cols()],
    };
    g.grow(rows, 0);
    Tree { nodes: g.nodes }
}

pub fn train_tree(x: &Matrix, y: &[bool], params: &TreeParams) -> Tree {
    let w = vec![1.0; y.len()];
    fit_tree(x, y, &w, (0..y.len()).collect(), params, MaxFeatures::All, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Mean tree probability minus ½.
    pub fn decision_value(&self, x: &[(usize, f64)]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.probability(x)).sum();
        s / self.trees.len().max(1) as f64 - 0.5
    }
}

/// Bootstrap trees with √d candidate features per split; tree `t` uses a
/// seed derived from `(seed, t)`, so the result does not depend on threads.
pub fn train_forest(x: &Matrix, y: &[bool], params: &ForestParams) -> Forest {
    let n = y.len();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive_indexed(params.seed, "forest-tree", t));
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let w = vec![1.0; n];
            fit_tree(x, y, &w, rows, &tree_params, MaxFeatures::Sqrt, Some(rng))
        })
        .collect();
    Forest { trees }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    /// (stump, weight)
    pub stumps: Vec<(Tree, f64)>,
}

impl Boosted {
    /// Weighted vote of ±1 stump outputs, normalized to [−1, 1].
    pub fn decision_value(&self, x: &[(usize, f64)]) -> f64 {
        let total: f64 = self.stumps.iter().map(|(_, a)| a).sum();
        let s: f64 = self
            .stumps
            .iter()
            .map(|(t, a)| if t.decision_value(x) >= 0.0 { *a } else { -*a })
            .sum();
        if total > 0.0 {
            s / total
        } else {
            0.0
        }
    }
}

/// SAMME with two classes: `α = lr · ln((1 − err) / err)`.
pub fn train_adaboost(x: &Matrix, y: &[bool], params: &AdaBoostParams) -> Boosted {
    let n = y.len();
    let stump_params = TreeParams { max_depth: 1, min_leaf: 1 };
    let mut w = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    let rows: Vec<usize> = (0..n).collect();
    for _ in 0..params.n_estimators {
        let stump = fit_tree(x, y, &w, rows.clone(), &stump_params, MaxFeatures::All, None);
        let wrong: Vec<bool> = (0..n)
            .map(|i| (stump.decision_value(&x.row(i).iter().collect::<Vec<_>>()) >= 0.0) != y[i])
            .collect();
        let total: f64 = w.iter().sum();
        let err: f64 = w.iter().zip(&wrong).filter(|(_, &e)| e).map(|(v, _)| v).sum::<f64>() / total;
        if err <= 0.0 {
            stumps.push((stump, 1.0));
            break;
        }
        if err >= 0.5 {
            if stumps.is_empty() {
                stumps.push((stump, 1.0));
            }
            break;
        }
        let alpha = params.learning_rate * ((1.0 - err) / err).ln();
        for (wi, &e) in w.iter_mut().zip(&wrong) {
            if e {
                *wi *= alpha.exp();
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        stumps.push((stump, alpha));
    }
    Boosted { stumps }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_like() -> (Matrix, Vec<bool>) {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.1, 0.1],
            vec![0.1, 0.9],
            vec![0.9, 0.1],
            vec![0.9, 0.9],
        ];
        let y = vec![false, true, true, false, false, true, true, false];
        (Matrix::from_dense(&pts), y)
    }

    fn sparse(x: &Matrix, i: usize) -> Vec<(usize, f64)> {
        x.row(i).iter().collect()
    }

    #[test]
    fn deep_tree_fits_xor() {
        let (x, y) = xor_like();
        let t = train_tree(&x, &y, &TreeParams { max_depth: 20, min_leaf: 1 });
        for i in 0..y.len() {
            assert_eq!(t.decision_value(&sparse(&x, i)) >= 0.0, y[i]);
        }
        assert!(t.depth() >= 2);
    }

    #[test]
    fn depth_and_leaf_limits() {
        let (x, y) = xor_like();
        assert_eq!(train_tree(&x, &y, &TreeParams { max_depth: 0, min_leaf: 1 }).nodes.len(), 1);
        let t = train_tree(&x, &y, &TreeParams { max_depth: 20, min_leaf: 5 });
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn negative_values_and_zero_block() {
        let x = Matrix::from_dense(&[vec![-2.0], vec![-1.0], vec![0.0], vec![0.0], vec![3.0]]);
        let y = [true, true, false, false, false];
        let t = train_tree(&x, &y, &TreeParams { max_depth: 1, min_leaf: 1 });
        match &t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, -0.5);
            }
            n => panic!("{n:?}"),
        }
    }

    #[test]
    fn forest_is_reproducible() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let x = Matrix::from_dense(&pts);
        let p = ForestParams { n_trees: 15, ..ForestParams::default() };
        let a = train_forest(&x, &y, &p);
        assert_eq!(a, train_forest(&x, &y, &p));
        assert!(a.decision_value(&[(0, 100.0)]) > 0.0);
        assert_ne!(a, train_forest(&x, &y, &ForestParams { seed: 2, ..p }));
    }

    #[test]
    fn agreeing_trees_give_their_label() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 + 1.0]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let f = train_forest(&Matrix::from_dense(&pts), &y, &ForestParams { n_trees: 9, ..ForestParams::default() });
        for q in [[(0usize, 0.5)], [(0, 100.0)]] {
            let votes: Vec<bool> = f.trees.iter().map(|t| t.decision_value(&q) >= 0.0).collect();
            assert!(votes.iter().all(|&v| v == votes[0]));
            assert_eq!(f.decision_value(&q) >= 0.0, votes[0]);
        }
    }

    #[test]
    fn single_stump_ensemble_equals_stump() {
        let (x, y) = xor_like();
        let b = train_adaboost(&x, &y, &AdaBoostParams { n_estimators: 1, learning_rate: 1.0 });
        assert_eq!(b.stumps.len(), 1);
        let stump = &b.stumps[0].0;
        for i in 0..y.len() {
            let r = sparse(&x, i);
            assert_eq!(b.decision_value(&r) >= 0.0, stump.decision_value(&r) >= 0.0);
        }
    }

    #[test]
    fn boosting_fits_threshold_data() {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<bool> = (0..30).map(|i| (5..15).contains(&i)).collect();
        let x = Matrix::from_dense(&pts);
        let b = train_adaboost(&x, &y, &AdaBoostParams::default());
        let acc = (0..30).filter(|&i| (b.decision_value(&sparse(&x, i)) >= 0.0) == y[i]).count();
        assert!(acc >= 29, "{acc}");
    }
}
