//! Negative-sampling loss, its gradients and the SGD step.
//!
//! For an input mean `h` over the context rows (and the document row, if
//! any), a target `t` and negatives `n`:
//!
//! `L = -ln σ(o_t·h) - Σ_n ln σ(-o_n·h)`

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

/// Read access to a flat parameter matrix.
pub trait Rows {
    fn get(&self, i: usize) -> f64;
}

/// In-place additive updates.
pub trait Store: Rows {
    fn add(&self, i: usize, delta: f64);
}

impl Rows for [f64] {
    fn get(&self, i: usize) -> f64 {
        self[i]
    }
}

impl Rows for [Cell<f64>] {
    fn get(&self, i: usize) -> f64 {
        self[i].get()
    }
}

impl Store for [Cell<f64>] {
    fn add(&self, i: usize, delta: f64) {
        self[i].set(self[i].get() + delta);
    }
}

impl Rows for [AtomicU64] {
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self[i].load(Ordering::Relaxed))
    }
}

// Racy read-modify-write: concurrent updates to the same cell may be lost.
impl Store for [AtomicU64] {
    fn add(&self, i: usize, delta: f64) {
        let v = f64::from_bits(self[i].load(Ordering::Relaxed)) + delta;
        self[i].store(v.to_bits(), Ordering::Relaxed);
    }
}

/// Which parameter groups an SGD step writes to.
#[derive(Debug, Clone, Copy)]
pub struct Update {
    pub words: bool,
    pub doc: bool,
    pub output: bool,
}

impl Update {
    pub const ALL: Update = Update {
        words: true,
        doc: true,
        output: true,
    };
    pub const DOC_ONLY: Update = Update {
        words: false,
        doc: true,
        output: false,
    };
}

#[derive(Debug, Clone, Copy)]
pub struct NsExample<'a> {
    /// Context word rows of the input matrix.
    pub words: &'a [usize],
    /// Document row, for paragraph vectors.
    pub doc: Option<usize>,
    pub target: usize,
    pub negatives: &'a [usize],
}

impl NsExample<'_> {
    fn n_inputs(&self) -> usize {
        self.words.len() + usize::from(self.doc.is_some())
    }
}

pub struct Scratch {
    h: Vec<f64>,
    grad_h: Vec<f64>,
    /// One gradient row per output (target first, then negatives).
    out_grad: Vec<f64>,
}

impl Scratch {
    pub fn new(dim: usize, negatives: usize) -> Self {
        Scratch {
            h: vec![0.0; dim],
            grad_h: vec![0.0; dim],
            out_grad: vec![0.0; dim * (negatives + 1)],
        }
    }
}

fn mean_input<W: Rows + ?Sized, D: Rows + ?Sized>(words: &W, docs: &D, dim: usize, ex: &NsExample<'_>, h: &mut [f64]) {
    h.fill(0.0);
    for &w in ex.words {
        for (k, hk) in h.iter_mut().enumerate() {
            *hk += words.get(w * dim + k);
        }
    }
    if let Some(d) = ex.doc {
        for (k, hk) in h.iter_mut().enumerate() {
            *hk += docs.get(d * dim + k);
        }
    }
    let inv = 1.0 / ex.n_inputs() as f64;
    h.iter_mut().for_each(|x| *x *= inv);
}

fn dot_row<O: Rows + ?Sized>(output: &O, row: usize, dim: usize, h: &[f64]) -> f64 {
    h.iter().enumerate().map(|(k, hk)| hk * output.get(row * dim + k)).sum()
}

/// -ln σ(x), computed without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn outputs<'a>(ex: &'a NsExample<'a>) -> impl Iterator<Item = (usize, f64)> + 'a {
    std::iter::once((ex.target, 1.0)).chain(ex.negatives.iter().map(|&n| (n, 0.0)))
}

pub fn negative_sampling_loss<W: Rows + ?Sized, D: Rows + ?Sized, O: Rows + ?Sized>(
    words: &W,
    docs: &D,
    output: &O,
    dim: usize,
    ex: &NsExample<'_>,
) -> f64 {
    if ex.n_inputs() == 0 {
        return 0.0;
    }
    let mut h = vec![0.0; dim];
    mean_input(words, docs, dim, ex, &mut h);
    outputs(ex)
        .map(|(row, label)| {
            let s = dot_row(output, row, dim, &h);
            if label > 0.5 {
                neg_log_sigmoid(s)
            } else {
                neg_log_sigmoid(-s)
            }
        })
        .sum()
}

/// Fills `scratch` with dL/dh and dL/d(output row) and returns the loss.
fn gradients_into<W: Rows + ?Sized, D: Rows + ?Sized, O: Rows + ?Sized>(
    words: &W,
    docs: &D,
    output: &O,
    dim: usize,
    ex: &NsExample<'_>,
    scratch: &mut Scratch,
) -> f64 {
    mean_input(words, docs, dim, ex, &mut scratch.h);
    scratch.grad_h.fill(0.0);
    let n_out = 1 + ex.negatives.len();
    if scratch.out_grad.len() < n_out * dim {
        scratch.out_grad.resize(n_out * dim, 0.0);
    }
    let mut loss = 0.0;
    for (j, (row, label)) in outputs(ex).enumerate() {
        let s = dot_row(output, row, dim, &scratch.h);
        loss += if label > 0.5 { neg_log_sigmoid(s) } else { neg_log_sigmoid(-s) };
        let g = sigmoid(s) - label;
        for k in 0..dim {
            scratch.grad_h[k] += g * output.get(row * dim + k);
            scratch.out_grad[j * dim + k] = g * scratch.h[k];
        }
    }
    loss
}

/// Analytic gradients, aggregated per parameter row.
#[derive(Debug, Clone, PartialEq)]
pub struct NsGradients {
    pub loss: f64,
    /// (word row, gradient); a word repeated in the context appears once with the summed gradient.
    pub words: Vec<(usize, Vec<f64>)>,
    pub doc: Option<(usize, Vec<f64>)>,
    pub output: Vec<(usize, Vec<f64>)>,
}

fn accumulate(rows: &mut Vec<(usize, Vec<f64>)>, row: usize, grad: impl Iterator<Item = f64>) {
    let slot = match rows.iter().position(|(r, _)| *r == row) {
        Some(p) => p,
        None => {
            rows.push((row, Vec::new()));
            rows.len() - 1
        }
    };
    let acc = &mut rows[slot].1;
    for (k, g) in grad.enumerate() {
        if k < acc.len() {
            acc[k] += g;
        } else {
            acc.push(g);
        }
    }
}

pub fn negative_sampling_gradients<W: Rows + ?Sized, D: Rows + ?Sized, O: Rows + ?Sized>(
    words: &W,
    docs: &D,
    output: &O,
    dim: usize,
    ex: &NsExample<'_>,
) -> NsGradients {
    let mut scratch = Scratch::new(dim, ex.negatives.len());
    if ex.n_inputs() == 0 {
        return NsGradients {
            loss: 0.0,
            words: Vec::new(),
            doc: None,
            output: Vec::new(),
        };
    }
    let loss = gradients_into(words, docs, output, dim, ex, &mut scratch);
    let inv = 1.0 / ex.n_inputs() as f64;
    let mut word_grads = Vec::new();
    for &w in ex.words {
        accumulate(&mut word_grads, w, scratch.grad_h.iter().map(|g| g * inv));
    }
    let mut out_grads = Vec::new();
    for (j, (row, _)) in outputs(ex).enumerate() {
        accumulate(&mut out_grads, row, scratch.out_grad[j * dim..(j + 1) * dim].iter().copied());
    }
    NsGradients {
        loss,
        words: word_grads,
        doc: ex.doc.map(|d| (d, scratch.grad_h.iter().map(|g| g * inv).collect())),
        output: out_grads,
    }
}

/// One SGD step on a single example; gradients are evaluated at the current
/// parameters before any row is written. Returns the loss before the step.
#[allow(clippy::too_many_arguments)]
pub fn step<W: Store + ?Sized, D: Store + ?Sized, O: Store + ?Sized>(
    words: &W,
    docs: &D,
    output: &O,
    dim: usize,
    ex: &NsExample<'_>,
    lr: f64,
    update: Update,
    scratch: &mut Scratch,
) -> f64 {
    if ex.n_inputs() == 0 {
        return 0.0;
    }
    let loss = gradients_into(words, docs, output, dim, ex, scratch);
    if update.output {
        for (j, (row, _)) in outputs(ex).enumerate() {
            for k in 0..dim {
                output.add(row * dim + k, -lr * scratch.out_grad[j * dim + k]);
            }
        }
    }
    let scale = -lr / ex.n_inputs() as f64;
    if update.words {
        for &w in ex.words {
            for k in 0..dim {
                words.add(w * dim + k, scale * scratch.grad_h[k]);
            }
        }
    }
    if update.doc {
        if let Some(d) = ex.doc {
            for k in 0..dim {
                docs.add(d * dim + k, scale * scratch.grad_h[k]);
            }
        }
    }
    loss
}

/// Read-only matrices can take part in a step whose [`Update`] never writes them.
impl Store for [f64] {
    fn add(&self, _i: usize, _delta: f64) {
        unreachable!("attempted to write a frozen matrix")
    }
}
