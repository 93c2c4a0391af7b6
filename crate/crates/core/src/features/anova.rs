//! Two-group one-way ANOVA F-scores over sparse rows and top-k selection.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{FeatureError, FeatureVector};

/// Number of features to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectK {
    All,
    Top(usize),
}

impl std::str::FromStr for SelectK {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(SelectK::All)
        } else {
            s.parse().map(SelectK::Top).map_err(|_| format!("expected a count or \"all\", got {s:?}"))
        }
    }
}

impl std::fmt::Display for SelectK {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectK::All => f.write_str("all"),
            SelectK::Top(k) => write!(f, "{k}"),
        }
    }
}

/// Serialized as a count or the string `"all"`.
impl Serialize for SelectK {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SelectK::All => s.serialize_str("all"),
            SelectK::Top(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for SelectK {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(k) => Ok(SelectK::Top(k)),
            Repr::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Group {
    n: usize,
    sum: f64,
    min: f64,
    max: f64,
    nnz: usize,
}

impl Group {
    fn new(n: usize) -> Self {
        Group { n, sum: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY, nnz: 0 }
    }

    fn add(&mut self, v: f64) {
        self.sum += v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.nnz += 1;
    }

    /// Implicit zeros count towards min and max.
    fn is_constant(&self) -> bool {
        let (mut lo, mut hi) = (self.min, self.max);
        if self.nnz < self.n {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        lo == hi
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }
}

fn class_sizes(y: &[bool]) -> Result<[usize; 2], FeatureError> {
    let pos = y.iter().filter(|&&b| b).count();
    let sizes = [y.len() - pos, pos];
    if sizes.contains(&0) {
        return Err(FeatureError::SingleClass);
    }
    Ok(sizes)
}

/// F = MS_between / MS_within with df (1, n − 2).
///
/// Both groups constant: +∞ if the constants differ, otherwise 0.
pub fn anova_f_scores(rows: &[FeatureVector], y: &[bool], n_features: usize) -> Result<Vec<f64>, FeatureError> {
    if rows.len() != y.len() {
        return Err(FeatureError::DimensionMismatch { expected: rows.len(), found: y.len() });
    }
    let sizes = class_sizes(y)?;
    let mut groups = vec![[Group::new(sizes[0]), Group::new(sizes[1])]; n_features];
    for (row, &label) in rows.iter().zip(y) {
        for &(col, v) in &row.values {
            if col >= n_features {
                return Err(FeatureError::DimensionMismatch { expected: n_features, found: col + 1 });
            }
            groups[col][label as usize].add(v);
        }
    }
    // Second pass for the within-group sum of squares.
    let mut ssw = vec![[0.0f64; 2]; n_features];
    for (row, &label) in rows.iter().zip(y) {
        for &(col, v) in &row.values {
            let d = v - groups[col][label as usize].mean();
            ssw[col][label as usize] += d * d;
        }
    }
    let n = y.len() as f64;
    Ok(groups
        .iter()
        .zip(&ssw)
        .map(|(g, s)| {
            let means = [g[0].mean(), g[1].mean()];
            let within: f64 = (0..2)
                .map(|k| {
                    if g[k].is_constant() {
                        0.0
                    } else {
                        let zeros = (g[k].n - g[k].nnz) as f64;
                        s[k] + zeros * means[k] * means[k]
                    }
                })
                .sum();
            f_value(means, [g[0].n as f64, g[1].n as f64], within, n, g[0].is_constant() && g[1].is_constant())
        })
        .collect())
}

fn f_value(means: [f64; 2], sizes: [f64; 2], ssw: f64, n: f64, constant: bool) -> f64 {
    let grand = (means[0] * sizes[0] + means[1] * sizes[1]) / n;
    let ssb: f64 = (0..2).map(|k| sizes[k] * (means[k] - grand).powi(2)).sum();
    if constant {
        return if means[0] != means[1] { f64::INFINITY } else { 0.0 };
    }
    let msw = ssw / (n - 2.0);
    ssb / msw
}

/// F-score of a single dense column.
pub fn anova_f(values: &[f64], y: &[bool]) -> Result<f64, FeatureError> {
    let rows: Vec<FeatureVector> = values
        .iter()
        .map(|&v| FeatureVector::new(if v != 0.0 { vec![(0, v)] } else { vec![] }, String::new()))
        .collect();
    Ok(anova_f_scores(&rows, y, 1)?[0])
}

/// Column indices of the top-k scores; ties keep index order.
pub fn select_k_best(scores: &[f64], k: SelectK) -> Result<Vec<usize>, FeatureError> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    match k {
        SelectK::All => Ok(order),
        SelectK::Top(k) if k > scores.len() => Err(FeatureError::KTooLarge { k, n: scores.len() }),
        SelectK::Top(k) => {
            order.truncate(k);
            Ok(order)
        }
    }
}
