//! Binary confusion counts, precision, recall and F-beta.

use serde::{Deserialize, Serialize};

/// `(1+β²)·p·r / (β²·p + r)`, or 0 when the denominator is 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den > 0.0 {
        (1.0 + b2) * precision * recall / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub beta: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl Metrics {
    /// Precision or recall with an empty denominator is 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize, beta: f64) -> Metrics {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Metrics { precision, recall, f_beta: f_beta(precision, recall, beta), beta, tp, fp, fn_, tn }
    }

    pub fn from_predictions(predicted: &[bool], truth: &[bool], beta: f64) -> Metrics {
        assert_eq!(predicted.len(), truth.len(), "prediction and truth lengths differ");
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        Metrics::from_counts(tp, fp, fn_, tn, beta)
    }

    pub fn n(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Unweighted mean of precision, recall and F over folds; counts are summed.
    pub fn mean(folds: &[Metrics]) -> Metrics {
        let n = folds.len().max(1) as f64;
        let beta = folds.first().map_or(1.0, |m| m.beta);
        let avg = |f: fn(&Metrics) -> f64| folds.iter().map(f).sum::<f64>() / n;
        Metrics {
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            f_beta: avg(|m| m.f_beta),
            beta,
            tp: folds.iter().map(|m| m.tp).sum(),
            fp: folds.iter().map(|m| m.fp).sum(),
            fn_: folds.iter().map(|m| m.fn_).sum(),
            tn: folds.iter().map(|m| m.tn).sum(),
        }
    }

    /// Metrics of the summed confusion counts.
    pub fn pooled(folds: &[Metrics]) -> Metrics {
        let beta = folds.first().map_or(1.0, |m| m.beta);
        let sum = |f: fn(&Metrics) -> usize| folds.iter().map(f).sum();
        Metrics::from_counts(sum(|m| m.tp), sum(|m| m.fp), sum(|m| m.fn_), sum(|m| m.tn), beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_values() {
        assert!((f_beta(0.91, 0.91, 0.5) - 0.91).abs() < 1e-12);
        assert!((f_beta(0.8, 0.4, 0.5) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f_beta(0.7, 0.0, 0.5), 0.0);
        assert_eq!(f_beta(0.0, 0.0, 0.5), 0.0);
    }

    #[test]
    fn counts_and_empty_denominators() {
        let m = Metrics::from_predictions(&[true, true, false, false, true], &[true, false, true, false, true], 1.0);
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (2, 1, 1, 1));
        assert_eq!(m.n(), 5);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        let none = Metrics::from_predictions(&[false, false], &[true, false], 0.5);
        assert_eq!((none.precision, none.recall, none.f_beta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn mean_and_pooled_differ() {
        let a = Metrics::from_counts(1, 0, 0, 5, 0.5);
        let b = Metrics::from_counts(0, 1, 1, 4, 0.5);
        let mean = Metrics::mean(&[a, b]);
        assert_eq!(mean.precision, 0.5);
        assert_eq!(mean.f_beta, 0.5);
        assert_eq!(mean.n(), 12);
        let pooled = Metrics::pooled(&[a, b]);
        assert_eq!(pooled.precision, 0.5);
        assert_eq!(pooled.recall, 0.5);
    }

    proptest! {
        #[test]
        fn f_equals_count_formula(tp in 0usize..500, fp in 0usize..500, fn_ in 0usize..500) {
            let m = Metrics::from_counts(tp, fp, fn_, 0, 0.5);
            // F_β = (1+β²)tp / ((1+β²)tp + β²fn + fp)
            let den = 1.25 * tp as f64 + 0.25 * fn_ as f64 + fp as f64;
            let oracle = if tp == 0 { 0.0 } else { 1.25 * tp as f64 / den };
            prop_assert!((m.f_beta - oracle).abs() <= 1e-12);
        }

        #[test]
        fn beta_orders_by_precision(p in 0.01f64..1.0, r in 0.01f64..1.0) {
            prop_assume!((p - r).abs() > 1e-6);
            let (f05, f1, f2) = (f_beta(p, r, 0.5), f_beta(p, r, 1.0), f_beta(p, r, 2.0));
            if p > r {
                prop_assert!(f05 > f1 && f1 > f2);
            } else {
                prop_assert!(f05 < f1 && f1 < f2);
            }
        }
    }
}
