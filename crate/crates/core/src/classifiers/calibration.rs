//! Platt scaling of decision values.

use serde::{Deserialize, Serialize};

use super::ClassifierError;

/// `p = 1 / (1 + exp(a·f + b))` with `a ≤ 0`, so `p` is non-decreasing in `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    /// Newton's method with backtracking on the regularized targets of Platt
    /// (1999). If the unconstrained slope is positive, only `b` is refitted
    /// with `a = 0`.
    pub fn fit(decision: &[f64], y: &[bool]) -> Result<Platt, ClassifierError> {
        let n_pos = y.iter().filter(|&&l| l).count();
        let n_neg = y.len() - n_pos;
        if decision.len() != y.len() || n_pos == 0 || n_neg == 0 {
            return Err(ClassifierError::DegenerateHoldout);
        }
        let hi = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
        let lo = 1.0 / (n_neg as f64 + 2.0);
        let t: Vec<f64> = y.iter().map(|&l| if l { hi } else { lo }).collect();
        let prior = ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln();
        let fit = newton(decision, &t, 0.0, prior, true);
        if fit.a <= 0.0 {
            return Ok(fit);
        }
        Ok(newton(decision, &t, 0.0, prior, false))
    }

    pub fn confidence(&self, f: f64) -> f64 {
        let z = self.a * f + self.b;
        // Stable form of 1 / (1 + e^z).
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

fn loss(f: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    f.iter()
        .zip(t)
        .map(|(&fi, &ti)| {
            let z = a * fi + b;
            // −[t ln p + (1−t) ln(1−p)] with p = σ(−z).
            if z >= 0.0 {
                ti * z + (1.0 + (-z).exp()).ln()
            } else {
                (ti - 1.0) * z + (1.0 + z.exp()).ln()
            }
        })
        .sum()
}

fn newton(f: &[f64], t: &[f64], a0: f64, b0: f64, fit_a: bool) -> Platt {
    let (mut a, mut b) = (a0, b0);
    let sigma = 1e-12;
    let mut current = loss(f, t, a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&fi, &ti) in f.iter().zip(t) {
            let p = Platt { a, b }.confidence(fi);
            let q = 1.0 - p;
            let d2 = p * q;
            h11 += fi * fi * d2;
            h22 += d2;
            h21 += fi * d2;
            let d1 = ti - p;
            g1 += fi * d1;
            g2 += d1;
        }
        if !fit_a {
            g1 = 0.0;
        }
        if g1.abs() < 1e-10 && g2.abs() < 1e-10 {
            break;
        }
        let (da, db) = if fit_a {
            let det = h11 * h22 - h21 * h21;
            (-(h22 * g1 - h21 * g2) / det, -(-h21 * g1 + h11 * g2) / det)
        } else {
            (0.0, -g2 / h22)
        };
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut improved = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let l = loss(f, t, na, nb);
            if l < current + 1e-4 * step * gd {
                a = na;
                b = nb;
                current = l;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    Platt { a: if fit_a { a } else { 0.0 }, b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn symmetric_values_give_half_at_zero() {
        let mut rng = crate::seed::rng(11);
        let mut f = Vec::new();
        let mut y = Vec::new();
        for _ in 0..500 {
            let v: f64 = rng.gen_range(0.0..3.0);
            let flip = rng.gen_bool(0.1);
            f.push(v);
            y.push(!flip);
            f.push(-v);
            y.push(flip);
        }
        let p = Platt::fit(&f, &y).unwrap();
        assert!(p.a < 0.0);
        assert!((p.confidence(0.0) - 0.5).abs() <= 0.05);
    }

    #[test]
    fn monotone_in_decision_value() {
        let f = [-2.0, -1.0, -0.5, 0.1, 0.4, 1.5, 2.0, -0.2];
        let y = [false, false, true, false, true, true, true, false];
        let p = Platt::fit(&f, &y).unwrap();
        let grid: Vec<f64> = (-50..=50).map(|i| i as f64 / 10.0).collect();
        for w in grid.windows(2) {
            assert!(p.confidence(w[0]) <= p.confidence(w[1]));
        }
        assert!((0.0..=1.0).contains(&p.confidence(1e6)));
    }

    #[test]
    fn anti_correlated_scores_fall_back_to_flat() {
        let f = [-2.0, -1.0, 1.0, 2.0];
        let y = [true, true, false, false];
        let p = Platt::fit(&f, &y).unwrap();
        assert_eq!(p.a, 0.0);
        assert_eq!(p.confidence(-5.0), p.confidence(5.0));
    }

    #[test]
    fn single_class_holdout_is_rejected() {
        assert!(matches!(Platt::fit(&[1.0, 2.0], &[true, true]), Err(ClassifierError::DegenerateHoldout)));
    }
}
