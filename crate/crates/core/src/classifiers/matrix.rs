//! Compressed sparse rows and per-column standardization.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;

/// Row-major sparse matrix; column indices within a row are ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    n_cols: usize,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<(usize, f64)>], n_cols: usize) -> Self {
        let mut m = Matrix {
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
            n_cols,
        };
        for r in rows {
            m.push_row(r.iter().copied());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let sparse: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect())
            .collect();
        Matrix::from_rows(&sparse, n_cols)
    }

    /// Keeps `columns` (registry indices) in the given order; other entries are dropped.
    pub fn from_features(rows: &[FeatureVector], columns: &ColumnMap) -> Self {
        let mut m = Matrix {
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
            n_cols: columns.len(),
        };
        for r in rows {
            m.push_row(columns.project(r));
        }
        m
    }

    fn push_row<I: IntoIterator<Item = (usize, f64)>>(&mut self, entries: I) {
        let mut row: Vec<(usize, f64)> = entries.into_iter().filter(|(_, v)| *v != 0.0).collect();
        row.sort_by_key(|&(c, _)| c);
        for (c, v) in row {
            debug_assert!(c < self.n_cols);
            self.indices.push(c as u32);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        Row {
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut m = Matrix {
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
            n_cols: self.n_cols,
        };
        for &r in rows {
            let row = self.row(r);
            m.indices.extend_from_slice(row.indices);
            m.values.extend_from_slice(row.values);
            m.indptr.push(m.indices.len());
        }
        m
    }

    /// Multiplies every column by `scale[c]`.
    pub fn scale_columns(&self, scale: &[f64]) -> Matrix {
        let mut m = self.clone();
        for (c, v) in m.indices.iter().zip(m.values.iter_mut()) {
            *v *= scale[*c as usize];
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl<'a> Row<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        let (i, v) = (self.indices, self.values);
        i.iter().zip(v).map(|(&c, &x)| (c as usize, x))
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(c, x)| dense[c] * x).sum()
    }

    pub fn sq_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Exact squared Euclidean distance by merging the two index lists.
    pub fn sq_dist(&self, other: &Row<'_>) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut d = 0.0;
        while a < self.indices.len() || b < other.indices.len() {
            let ca = self.indices.get(a).copied().unwrap_or(u32::MAX);
            let cb = other.indices.get(b).copied().unwrap_or(u32::MAX);
            let diff = match ca.cmp(&cb) {
                Ordering::Less => {
                    a += 1;
                    self.values[a - 1]
                }
                Ordering::Greater => {
                    b += 1;
                    -other.values[b - 1]
                }
                Ordering::Equal => {
                    a += 1;
                    b += 1;
                    self.values[a - 1] - other.values[b - 1]
                }
            };
            d += diff * diff;
        }
        d
    }

    /// Lexicographic order over (column, value) pairs.
    pub fn total_cmp(&self, other: &Row<'_>) -> Ordering {
        for ((ca, va), (cb, vb)) in self.iter().zip(other.iter()) {
            let o = ca.cmp(&cb).then_with(|| va.total_cmp(&vb));
            if o != Ordering::Equal {
                return o;
            }
        }
        self.indices.len().cmp(&other.indices.len())
    }
}

/// Registry columns used by a model, in model order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "ColumnSpec", into = "ColumnSpec")]
pub struct ColumnMap {
    columns: Vec<usize>,
    n_features: usize,
    /// Registry column → model column, `u32::MAX` when unused.
    lookup: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct ColumnSpec {
    columns: Vec<usize>,
    n_features: usize,
}

impl From<ColumnSpec> for ColumnMap {
    fn from(s: ColumnSpec) -> Self {
        ColumnMap::new(s.columns, s.n_features)
    }
}

impl From<ColumnMap> for ColumnSpec {
    fn from(m: ColumnMap) -> Self {
        ColumnSpec {
            columns: m.columns,
            n_features: m.n_features,
        }
    }
}

impl ColumnMap {
    pub fn new(columns: Vec<usize>, n_features: usize) -> Self {
        let mut lookup = vec![u32::MAX; n_features];
        for (i, &c) in columns.iter().enumerate() {
            if c < n_features {
                lookup[c] = i as u32;
            }
        }
        ColumnMap {
            columns,
            n_features,
            lookup,
        }
    }

    pub fn identity(n_features: usize) -> Self {
        ColumnMap::new((0..n_features).collect(), n_features)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn project<'a>(&'a self, v: &'a FeatureVector) -> impl Iterator<Item = (usize, f64)> + 'a {
        v.values.iter().filter_map(move |&(c, x)| match self.lookup.get(c) {
            Some(&m) if m != u32::MAX => Some((m as usize, x)),
            _ => None,
        })
    }

    pub fn project_row(&self, v: &FeatureVector) -> Vec<(usize, f64)> {
        let mut r: Vec<(usize, f64)> = self.project(v).collect();
        r.sort_by_key(|&(c, _)| c);
        r
    }
}

/// Zero-mean, unit-variance scaling learned on training rows only.
/// Constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.n_rows() as f64;
        let d = x.n_cols();
        let mut mean = vec![0.0; d];
        for i in 0..x.n_rows() {
            for (c, v) in x.row(i).iter() {
                mean[c] += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n.max(1.0));
        // Two-pass variance; implicit zeros contribute mean².
        let mut ss = vec![0.0; d];
        let mut nnz = vec![0usize; d];
        for i in 0..x.n_rows() {
            for (c, v) in x.row(i).iter() {
                ss[c] += (v - mean[c]).powi(2);
                nnz[c] += 1;
            }
        }
        let std = (0..d)
            .map(|c| {
                let var = (ss[c] + (x.n_rows() - nnz[c]) as f64 * mean[c] * mean[c]) / n.max(1.0);
                let s = var.sqrt();
                if s > 1e-12 * mean[c].abs().max(1.0) && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn identity(d: usize) -> Self {
        Standardizer {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    pub fn inv_std(&self) -> Vec<f64> {
        self.std.iter().map(|s| 1.0 / s).collect()
    }

    /// Dense standardized copy of a sparse row.
    pub fn transform_dense(&self, row: &[(usize, f64)]) -> Vec<f64> {
        let mut out: Vec<f64> = self.mean.iter().zip(&self.std).map(|(m, s)| -m / s).collect();
        for &(c, v) in row {
            out[c] = (v - self.mean[c]) / self.std[c];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_matches_dense_formula() {
        let dense = vec![vec![1.0, 0.0, 5.0], vec![3.0, 0.0, 5.0], vec![0.0, 2.0, 5.0]];
        let st = Standardizer::fit(&Matrix::from_dense(&dense));
        assert!((st.mean[0] - 4.0 / 3.0).abs() < 1e-15);
        let var0: f64 = dense.iter().map(|r| (r[0] - 4.0 / 3.0).powi(2)).sum::<f64>() / 3.0;
        assert!((st.std[0] - var0.sqrt()).abs() < 1e-15);
        assert_eq!(st.std[2], 1.0);
        let z = st.transform_dense(&[(0, 1.0), (2, 5.0)]);
        assert_eq!(z[2], 0.0);
    }

    #[test]
    fn sparse_distance_and_order() {
        let m = Matrix::from_rows(&[vec![(0, 1.0), (3, 2.0)], vec![(1, 1.0), (3, 1.0)]], 4);
        assert_eq!(m.row(0).sq_dist(&m.row(1)), 1.0 + 1.0 + 1.0);
        assert_eq!(m.row(0).sq_dist(&m.row(0)), 0.0);
        assert_eq!(m.row(0).total_cmp(&m.row(1)), Ordering::Less);
        assert_eq!(m.row(0).dot(&[1.0, 1.0, 1.0, 1.0]), 3.0);
    }

    #[test]
    fn column_map_projects_and_reorders() {
        let map = ColumnMap::new(vec![5, 1], 6);
        let v = FeatureVector::new(vec![(1, 2.0), (3, 9.0), (5, 4.0)], String::new());
        assert_eq!(map.project_row(&v), vec![(0, 4.0), (1, 2.0)]);
        let json = serde_json::to_string(&map).unwrap();
        let back: ColumnMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, map);
    }
}
