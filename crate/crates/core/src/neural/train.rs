//! Backpropagation, Adam and the finite-difference gradient check.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{Activations, CnnModel, CnnParams, NeuralError, N_CLASSES, OOV};
use crate::seed;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
/// Samples per parallel work unit; partial sums are added in a fixed order.
const CHUNK: usize = 4;

fn cross_entropy(act: &Activations, class: usize) -> f64 {
    let m = act.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + act.logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    lse - act.logits[class]
}

impl CnnModel {
    /// Cross-entropy of one sample and its gradient, added into `grad`.
    fn backward(&self, seq: &[usize], positive: bool, grad: &mut CnnParams) -> f64 {
        let seq = &seq[..seq.len().min(self.config.max_len)];
        let act = self.forward(seq);
        let class = usize::from(positive);
        let (f_n, h_n, k_size, dim) = (self.config.n_filters, self.config.dense_units, self.config.kernel_size, self.dim);
        let p = &self.params;

        let mut g = act.probs;
        g[class] -= 1.0;
        let mut da = vec![0.0; h_n];
        for c in 0..N_CLASSES {
            grad.out_b[c] += g[c];
            for h in 0..h_n {
                grad.out_w[c * h_n + h] += g[c] * act.hidden[h];
                da[h] += p.out_w[c * h_n + h] * g[c];
            }
        }
        let mut dpool = vec![0.0; f_n];
        for h in 0..h_n {
            da[h] *= 1.0 - act.hidden[h] * act.hidden[h];
            grad.dense_b[h] += da[h];
            for f in 0..f_n {
                grad.dense_w[h * f_n + f] += da[h] * act.pooled[f];
                dpool[f] += p.dense_w[h * f_n + f] * da[h];
            }
        }
        for f in 0..f_n {
            let dc = dpool[f] * (1.0 - act.pooled[f] * act.pooled[f]);
            grad.conv_b[f] += dc;
            let t = act.argmax[f];
            for k in 0..k_size {
                let Some(&idx) = seq.get(t + k) else { break };
                if idx > OOV {
                    let w = &mut grad.conv_w[(f * k_size + k) * dim..][..dim];
                    w.iter_mut().zip(self.embedding_row(idx)).for_each(|(gw, e)| *gw += dc * e);
                }
            }
        }
        cross_entropy(&act, class)
    }

    /// Mean gradient and summed loss over the samples `idx`.
    fn batch_gradient(&self, seqs: &[Vec<usize>], y: &[bool], idx: &[usize]) -> (CnnParams, f64) {
        let zero = self.params.zeros_like();
        let parts: Vec<(CnnParams, f64)> = idx
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut g = zero.clone();
                let loss = chunk.iter().map(|&i| self.backward(&seqs[i], y[i], &mut g)).sum();
                (g, loss)
            })
            .collect();
        let mut grad = zero;
        let mut loss = 0.0;
        for (g, l) in &parts {
            grad.add_assign(g);
            loss += l;
        }
        grad.scale(1.0 / idx.len() as f64);
        (grad, loss)
    }

    /// Mean cross-entropy over the samples, using the reference forward pass.
    pub fn mean_loss(&self, seqs: &[Vec<usize>], y: &[bool]) -> f64 {
        let total: f64 = seqs
            .iter()
            .zip(y)
            .map(|(s, &l)| cross_entropy(&self.forward_full(&self.pad(s)).1, usize::from(l)))
            .sum();
        total / seqs.len() as f64
    }
}

struct Adam {
    m: CnnParams,
    v: CnnParams,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(params: &CnnParams, lr: f64) -> Self {
        Adam { m: params.zeros_like(), v: params.zeros_like(), t: 0, lr }
    }

    fn step(&mut self, params: &mut CnnParams, grad: &CnnParams) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let groups = params.groups_mut().into_iter().zip(self.m.groups_mut()).zip(self.v.groups_mut());
        for (((p, m), v), g) in groups.zip(grad.groups()) {
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
            }
        }
    }
}

fn check_data(seqs: &[Vec<usize>], y: &[bool]) -> Result<(), NeuralError> {
    if seqs.len() != y.len() {
        return Err(NeuralError::LengthMismatch { sequences: seqs.len(), labels: y.len() });
    }
    if seqs.is_empty() {
        return Err(NeuralError::Empty);
    }
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(NeuralError::SingleClass);
    }
    Ok(())
}

/// Mini-batch Adam on mean cross-entropy. The sample order is reshuffled
/// every epoch from the configured seed; the embedding layer is never
/// touched. Returns the trained model and the mean loss of each epoch.
pub fn train(model: &CnnModel, seqs: &[Vec<usize>], y: &[bool]) -> Result<(CnnModel, Vec<f64>), NeuralError> {
    check_data(seqs, y)?;
    let mut model = model.clone();
    let cfg = model.config.clone();
    let mut adam = Adam::new(&model.params, cfg.learning_rate);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = seed::rng(seed::derive_indexed(cfg.seed, "cnn-epoch", epoch));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (grad, loss) = model.batch_gradient(seqs, y, batch);
            total += loss;
            adam.step(&mut model.params, &grad);
        }
        let mean = total / seqs.len() as f64;
        log::debug!("cnn epoch {epoch}: loss {mean:.6}");
        history.push(mean);
    }
    model.loss_history.extend_from_slice(&history);
    Ok((model, history))
}

/// Largest relative error per parameter group between the analytic gradient
/// and central differences, plus the largest change of the embedding layer
/// after one optimizer step on the same batch.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub groups: Vec<(&'static str, f64)>,
    pub embedding_delta: f64,
}

impl GradientCheck {
    pub fn max_error(&self) -> f64 {
        self.groups.iter().map(|g| g.1).fold(0.0, f64::max)
    }

    pub fn group(&self, name: &str) -> Option<f64> {
        self.groups.iter().find(|g| g.0 == name).map(|g| g.1)
    }
}

/// Relative error `|a − n| / max(|a|, |n|, 1e-7)`; the floor keeps
/// vanishing gradients from dominating.
fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-7)
}

/// Compares every trainable parameter's analytic gradient on the batch with
/// central differences (h = 1e-5). Meant for micro models only.
pub fn gradient_check(model: &CnnModel, seqs: &[Vec<usize>], y: &[bool]) -> Result<GradientCheck, NeuralError> {
    check_data(seqs, y)?;
    let h = 1e-5;
    let all: Vec<usize> = (0..seqs.len()).collect();
    let (analytic, _) = model.batch_gradient(seqs, y, &all);
    let mut probe = model.clone();
    let mut groups = Vec::new();
    for (gi, name) in CnnParams::GROUPS.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..analytic.groups()[gi].len() {
            let orig = probe.params.groups()[gi][i];
            probe.params.groups_mut()[gi][i] = orig + h;
            let up = probe.mean_loss(seqs, y);
            probe.params.groups_mut()[gi][i] = orig - h;
            let down = probe.mean_loss(seqs, y);
            probe.params.groups_mut()[gi][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(analytic.groups()[gi][i], numeric));
        }
        groups.push((*name, worst));
    }
    let mut stepped = model.clone();
    Adam::new(&stepped.params, stepped.config.learning_rate).step(&mut stepped.params, &analytic);
    let embedding_delta = stepped
        .embedding
        .iter()
        .zip(&model.embedding)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(GradientCheck { groups, embedding_delta })
}
