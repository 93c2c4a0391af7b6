//! k-nearest neighbours with majority vote.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
    pub standardize: bool,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5, standardize: true }
    }
}

/// Stored training rows, already divided by the column standard deviation
/// (centering cancels in distances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<bool>,
    pub scale: Vec<f64>,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[bool], k: usize, scale: Vec<f64>) -> Self {
        let xs = x.scale_columns(&scale);
        Knn {
            k: k.max(1),
            rows: (0..xs.n_rows()).map(|i| xs.row(i).iter().collect()).collect(),
            labels: y.to_vec(),
            scale,
        }
    }

    /// `(positive − negative votes) / k`; distance ties go to the lower row index.
    pub fn decision_value(&self, x: &[(usize, f64)]) -> f64 {
        let q: Vec<(usize, f64)> = x.iter().map(|&(c, v)| (c, v * self.scale[c])).collect();
        let mut d: Vec<(f64, usize)> = self.rows.iter().enumerate().map(|(i, r)| (sq_dist(&q, r), i)).collect();
        let k = self.k.min(d.len());
        if k == 0 {
            return 0.0;
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        d.select_nth_unstable_by(k - 1, cmp);
        let votes: f64 = d[..k].iter().map(|&(_, i)| if self.labels[i] { 1.0 } else { -1.0 }).sum();
        votes / k as f64
    }
}

fn sq_dist(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0;
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |e| e.0);
        let cb = b.get(j).map_or(usize::MAX, |e| e.0);
        let diff = if ca < cb {
            i += 1;
            a[i - 1].1
        } else if cb < ca {
            j += 1;
            -b[j - 1].1
        } else {
            i += 1;
            j += 1;
            a[i - 1].1 - b[j - 1].1
        };
        d += diff * diff;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_neighbour_memorizes() {
        let pts: Vec<Vec<f64>> = (0..25).map(|i| vec![(i * 13 % 7) as f64, (i % 5) as f64 * 0.3, i as f64]).collect();
        let y: Vec<bool> = (0..25).map(|i| (i * 7) % 3 == 0).collect();
        let x = Matrix::from_dense(&pts);
        let m = Knn::fit(&x, &y, 1, vec![1.0; 3]);
        for i in 0..25 {
            let r: Vec<(usize, f64)> = x.row(i).iter().collect();
            assert_eq!(m.decision_value(&r) >= 0.0, y[i]);
        }
    }

    #[test]
    fn vote_tie_is_zero() {
        let x = Matrix::from_dense(&[vec![1.0], vec![-1.0]]);
        let m = Knn::fit(&x, &[true, false], 2, vec![1.0]);
        assert_eq!(m.decision_value(&[]), 0.0);
    }
}
