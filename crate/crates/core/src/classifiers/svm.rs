//! Linear soft-margin SVM trained in the dual by pairwise coordinate descent.
//!
//! Minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ(w·xᵢ + b))`. The dual
//! `D(α) = ½‖Σ αᵢyᵢxᵢ‖² − Σ αᵢ`, `0 ≤ αᵢ ≤ C`, `Σ αᵢyᵢ = 0` is solved by
//! moving two multipliers at a time along `yᵢeᵢ − yⱼeⱼ`, which keeps the
//! equality constraint and leaves the bias unregularized. Each step is an
//! exact line minimization, so the dual objective never increases.
//!
//! Rows may be centered implicitly: the solver sees `xᵢ − m` while only the
//! sparse `xᵢ` is stored. Because `Σ αᵢyᵢ = 0`, `w = Σ αᵢyᵢxᵢ` is unaffected
//! by the centering and only the bias absorbs `w·m`.

use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Row};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    /// Upper bound on outer iterations.
    pub max_epochs: usize,
    /// Stop when the maximal KKT violation falls below this value.
    pub tolerance: f64,
    /// Kept for interface symmetry; the solver is deterministic.
    pub seed: u64,
    pub standardize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 0.5,
            max_epochs: 1000,
            tolerance: 1e-3,
            seed: 1,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    /// Decision function `w·x + b` over the stored (uncentered) rows.
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Multipliers in input row order.
    pub alphas: Vec<f64>,
    /// Dual objective at the start of every outer iteration and at the end.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct State<'a> {
    x: &'a Matrix,
    center: &'a [f64],
    y: Vec<f64>,
    alpha: Vec<f64>,
    w: Vec<f64>,
    /// `w·center`, kept in sync with `w`.
    shift: f64,
    c: f64,
}

impl State<'_> {
    fn output(&self, i: usize) -> f64 {
        self.x.row(i).dot(&self.w) - self.shift
    }

    /// `−yᵢ ∇ᵢD`.
    fn score(&self, i: usize) -> f64 {
        self.y[i] - self.output(i)
    }

    fn in_up(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] < self.c) || (self.y[i] < 0.0 && self.alpha[i] > 0.0)
    }

    fn in_low(&self, i: usize) -> bool {
        (self.y[i] > 0.0 && self.alpha[i] > 0.0) || (self.y[i] < 0.0 && self.alpha[i] < self.c)
    }

    fn objective(&self) -> f64 {
        0.5 * self.w.iter().map(|v| v * v).sum::<f64>() - self.alpha.iter().sum::<f64>()
    }

    fn recompute_shift(&mut self) {
        self.shift = self.w.iter().zip(self.center).map(|(a, b)| a * b).sum();
    }

    /// Exact step on the pair (i ∈ I_up, j ∈ I_low); returns the violation before the step.
    fn step(&mut self, i: usize, j: usize) -> f64 {
        let violation = self.score(i) - self.score(j);
        if violation <= 0.0 {
            return violation;
        }
        let (ri, rj) = (self.x.row(i), self.x.row(j));
        let curvature = ri.sq_dist(&rj).max(1e-12);
        let mut t = violation / curvature;
        // Box limits for αᵢ + yᵢt and αⱼ − yⱼt.
        t = t.min(if self.y[i] > 0.0 { self.c - self.alpha[i] } else { self.alpha[i] });
        t = t.min(if self.y[j] > 0.0 { self.alpha[j] } else { self.c - self.alpha[j] });
        if t <= 0.0 {
            return violation;
        }
        self.alpha[i] = (self.alpha[i] + self.y[i] * t).clamp(0.0, self.c);
        self.alpha[j] = (self.alpha[j] - self.y[j] * t).clamp(0.0, self.c);
        self.add_row(ri, t);
        self.add_row(rj, -t);
        violation
    }

    fn add_row(&mut self, r: Row<'_>, t: f64) {
        for (col, v) in r.iter() {
            self.w[col] += t * v;
            self.shift += t * v * self.center[col];
        }
    }

    fn bias(&self) -> f64 {
        let n = self.y.len();
        let free: Vec<f64> = (0..n)
            .filter(|&i| self.alpha[i] > 0.0 && self.alpha[i] < self.c)
            .map(|i| self.score(i))
            .collect();
        if !free.is_empty() {
            return free.iter().sum::<f64>() / free.len() as f64;
        }
        let up = (0..n).filter(|&i| self.in_up(i)).map(|i| self.score(i)).fold(f64::NEG_INFINITY, f64::max);
        let low = (0..n).filter(|&i| self.in_low(i)).map(|i| self.score(i)).fold(f64::INFINITY, f64::min);
        match (up.is_finite(), low.is_finite()) {
            (true, true) => (up + low) / 2.0,
            (true, false) => up,
            (false, true) => low,
            (false, false) => 0.0,
        }
    }
}

/// Canonical row order: label, then features. Makes the solution independent
/// of the input order.
fn canonical_order(x: &Matrix, y: &[bool]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].cmp(&y[b]).then_with(|| x.row(a).total_cmp(&x.row(b))).then(a.cmp(&b)));
    order
}

/// `center` is subtracted from every row implicitly (pass zeros for none).
/// Both classes must be present.
pub fn solve(x: &Matrix, center: &[f64], y: &[bool], params: &SvmParams) -> SvmSolution {
    let order = canonical_order(x, y);
    let xs = x.select_rows(&order);
    let n = y.len();
    let mut st = State {
        x: &xs,
        center,
        y: order.iter().map(|&i| if y[i] { 1.0 } else { -1.0 }).collect(),
        alpha: vec![0.0; n],
        w: vec![0.0; x.n_cols()],
        shift: 0.0,
        c: params.c,
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_epochs {
        st.recompute_shift();
        history.push(st.objective());
        let scores: Vec<f64> = (0..n).map(|i| st.score(i)).collect();
        let mut up: Vec<usize> = (0..n).filter(|&i| st.in_up(i)).collect();
        let mut low: Vec<usize> = (0..n).filter(|&i| st.in_low(i)).collect();
        up.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        low.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let gap = match (up.first(), low.first()) {
            (Some(&i), Some(&j)) => scores[i] - scores[j],
            _ => 0.0,
        };
        if gap < params.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        // Maximal violating pair first, then further disjoint pairs in rank order.
        let mut used = vec![false; n];
        let mut li = 0;
        for &i in &up {
            if used[i] {
                continue;
            }
            while li < low.len() && (used[low[li]] || low[li] == i) {
                li += 1;
            }
            let Some(&j) = low.get(li) else { break };
            if scores[i] - scores[j] < params.tolerance {
                break;
            }
            used[i] = true;
            used[j] = true;
            li += 1;
            if st.step(i, j) < params.tolerance {
                break;
            }
        }
    }
    st.recompute_shift();
    history.push(st.objective());
    let b = st.bias();
    let mut alphas = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        alphas[i] = st.alpha[k];
    }
    let shift = st.shift;
    SvmSolution {
        weights: st.w,
        bias: b - shift,
        alphas,
        objective_history: history,
        iterations,
        converged,
    }
}

/// `½‖w‖² + C Σ hinge` over rows already in the solver's input space.
pub fn primal_objective(weights: &[f64], bias: f64, x: &Matrix, y: &[bool], c: f64) -> f64 {
    let reg = 0.5 * weights.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = (0..x.n_rows())
        .map(|i| {
            let s = if y[i] { 1.0 } else { -1.0 };
            (1.0 - s * (x.row(i).dot(weights) + bias)).max(0.0)
        })
        .sum();
    reg + c * hinge
}
