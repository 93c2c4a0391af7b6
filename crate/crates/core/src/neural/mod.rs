//! Shallow convolutional text classifier on top of a frozen word embedding.
//!
//! Layers: embedding lookup, one valid 1D convolution with tanh, global max
//! pooling over time, a tanh dense layer and a two-way softmax. Forward and
//! backward passes are written out by hand.
//!
//! Token indices: 0 is padding, 1 is out-of-vocabulary, word `i` of the
//! embedding vocabulary is `i + 2`. Padding and OOV rows are zero vectors.

mod train;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embeddings::WordEmbeddingModel;
use crate::seed;

pub use train::{gradient_check, train, GradientCheck};

pub const CNN_FORMAT_VERSION: u32 = 1;
pub const N_CLASSES: usize = 2;
pub const PAD: usize = 0;
pub const OOV: usize = 1;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    Empty,
    #[error("training set contains only one class")]
    SingleClass,
    #[error("{sequences} sequences but {labels} labels")]
    LengthMismatch { sequences: usize, labels: usize },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnConfig {
    pub max_len: usize,
    /// Must equal the word model dimension when set.
    pub embed_dim: Option<usize>,
    pub n_filters: usize,
    pub kernel_size: usize,
    pub dense_units: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            max_len: 1000,
            embed_dim: None,
            n_filters: 128,
            kernel_size: 5,
            dense_units: 64,
            batch_size: 32,
            epochs: 5,
            learning_rate: 1e-3,
            seed: 1,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let sizes = [
            ("max_len", self.max_len),
            ("n_filters", self.n_filters),
            ("kernel_size", self.kernel_size),
            ("dense_units", self.dense_units),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(NeuralError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.kernel_size > self.max_len {
            return Err(NeuralError::InvalidConfig(format!(
                "kernel_size {} exceeds max_len {}",
                self.kernel_size, self.max_len
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NeuralError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }

    /// Number of convolution windows over a full-length input.
    pub fn conv_rows(&self) -> usize {
        self.max_len - self.kernel_size + 1
    }
}

/// Trainable parameters, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnParams {
    /// n_filters x kernel_size x dim
    pub conv_w: Vec<f64>,
    pub conv_b: Vec<f64>,
    /// dense_units x n_filters
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
    /// N_CLASSES x dense_units
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl CnnParams {
    pub const GROUPS: [&'static str; 6] = ["conv_w", "conv_b", "dense_w", "dense_b", "out_w", "out_b"];

    pub fn groups(&self) -> [&Vec<f64>; 6] {
        [&self.conv_w, &self.conv_b, &self.dense_w, &self.dense_b, &self.out_w, &self.out_b]
    }

    pub fn groups_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.conv_w,
            &mut self.conv_b,
            &mut self.dense_w,
            &mut self.dense_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn zeros_like(&self) -> CnnParams {
        let mut z = self.clone();
        for g in z.groups_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    pub fn add_assign(&mut self, other: &CnnParams) {
        for (a, b) in self.groups_mut().into_iter().zip(other.groups()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.groups_mut() {
            g.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn len(&self) -> usize {
        self.groups().iter().map(|g| g.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub pooled: Vec<f64>,
    /// Window index of each filter's maximum; the first index wins ties.
    pub argmax: Vec<usize>,
    pub hidden: Vec<f64>,
    pub logits: [f64; N_CLASSES],
    pub probs: [f64; N_CLASSES],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    format_version: u32,
    pub config: CnnConfig,
    dim: usize,
    /// Embedding vocabulary; token `vocab[i]` has index `i + 2`.
    vocab: Vec<String>,
    /// Frozen, (vocab + 2) x dim.
    embedding: Vec<f64>,
    pub params: CnnParams,
    pub loss_history: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

fn uniform<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.05..=0.05)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax(logits: [f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.map(|z| (z - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn build_index(vocab: &[String]) -> HashMap<String, usize> {
    vocab.iter().enumerate().map(|(i, w)| (w.clone(), i + 2)).collect()
}

impl CnnModel {
    /// Copies the word vectors into a frozen embedding layer and draws all
    /// other parameters uniformly from [-0.05, 0.05].
    pub fn build(m: &WordEmbeddingModel, cfg: &CnnConfig) -> Result<CnnModel, NeuralError> {
        cfg.validate()?;
        let dim = m.dim();
        if let Some(d) = cfg.embed_dim {
            if d != dim {
                return Err(NeuralError::DimensionMismatch { expected: d, found: dim });
            }
        }
        let vocab: Vec<String> = m.vocab().tokens().to_vec();
        let mut embedding = vec![0.0; 2 * dim];
        embedding.extend_from_slice(m.vectors());
        let mut rng = seed::rng(seed::derive_seed(cfg.seed, "cnn-init"));
        let (f, k, h) = (cfg.n_filters, cfg.kernel_size, cfg.dense_units);
        let params = CnnParams {
            conv_w: uniform(&mut rng, f * k * dim),
            conv_b: uniform(&mut rng, f),
            dense_w: uniform(&mut rng, h * f),
            dense_b: uniform(&mut rng, h),
            out_w: uniform(&mut rng, N_CLASSES * h),
            out_b: uniform(&mut rng, N_CLASSES),
        };
        let mut config = cfg.clone();
        config.embed_dim = Some(dim);
        Ok(CnnModel {
            format_version: CNN_FORMAT_VERSION,
            config,
            dim,
            index: build_index(&vocab),
            vocab,
            embedding,
            params,
            loss_history: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rows of the embedding layer, including padding and OOV.
    pub fn n_rows(&self) -> usize {
        self.vocab.len() + 2
    }

    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }

    pub fn embedding_row(&self, idx: usize) -> &[f64] {
        &self.embedding[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Hex SHA-256 of the embedding layer's bit patterns.
    pub fn embedding_hash(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.embedding {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn token_index(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV)
    }

    /// Token indices, truncated to the first `max_len` tokens and not padded.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().take(self.config.max_len).map(|t| self.token_index(t)).collect()
    }

    /// Post-pads (or truncates) an index sequence to exactly `max_len`.
    pub fn pad(&self, seq: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = seq.iter().copied().take(self.config.max_len).collect();
        out.resize(self.config.max_len, PAD);
        out
    }

    fn conv_value(&self, seq: &[usize], t: usize, f: usize) -> f64 {
        let (k_size, dim) = (self.config.kernel_size, self.dim);
        let mut z = self.params.conv_b[f];
        for k in 0..k_size {
            let Some(&idx) = seq.get(t + k) else { break };
            if idx > OOV {
                let w = &self.params.conv_w[(f * k_size + k) * dim..][..dim];
                z += dot(w, self.embedding_row(idx));
            }
        }
        z.tanh()
    }

    fn head(&self, pooled: Vec<f64>, argmax: Vec<usize>) -> Activations {
        let (f_n, h_n) = (self.config.n_filters, self.config.dense_units);
        let p = &self.params;
        let hidden: Vec<f64> = (0..h_n)
            .map(|h| (p.dense_b[h] + dot(&p.dense_w[h * f_n..(h + 1) * f_n], &pooled)).tanh())
            .collect();
        let mut logits = [0.0; N_CLASSES];
        for (c, l) in logits.iter_mut().enumerate() {
            *l = p.out_b[c] + dot(&p.out_w[c * h_n..(c + 1) * h_n], &hidden);
        }
        Activations { pooled, argmax, hidden, logits, probs: softmax(logits) }
    }

    /// Forward pass over an unpadded sequence (at most `max_len` indices are
    /// read). Windows made only of padding are evaluated once, since they all
    /// equal `tanh(bias)`.
    ///
    /// Panics if an index is outside the embedding layer.
    pub fn forward(&self, seq: &[usize]) -> Activations {
        let seq = &seq[..seq.len().min(self.config.max_len)];
        let rows = self.config.conv_rows();
        let real = seq.len().min(rows);
        let f_n = self.config.n_filters;
        let mut pooled = vec![f64::NEG_INFINITY; f_n];
        let mut argmax = vec![0; f_n];
        for f in 0..f_n {
            for t in 0..real {
                let v = self.conv_value(seq, t, f);
                if v > pooled[f] {
                    pooled[f] = v;
                    argmax[f] = t;
                }
            }
            if rows > seq.len() {
                let v = self.params.conv_b[f].tanh();
                if v > pooled[f] {
                    pooled[f] = v;
                    argmax[f] = seq.len();
                }
            }
        }
        self.head(pooled, argmax)
    }

    /// Reference forward pass that materializes the full `conv_rows x
    /// n_filters` convolution output of a padded sequence.
    pub fn forward_full(&self, padded: &[usize]) -> (Vec<f64>, Activations) {
        assert_eq!(padded.len(), self.config.max_len, "sequence must be padded to max_len");
        let (k_size, dim, f_n) = (self.config.kernel_size, self.dim, self.config.n_filters);
        let rows = self.config.conv_rows();
        let input: Vec<f64> = padded.iter().flat_map(|&i| self.embedding_row(i).iter().copied()).collect();
        let mut conv = vec![0.0; rows * f_n];
        for t in 0..rows {
            let window = &input[t * dim..(t + k_size) * dim];
            for f in 0..f_n {
                let w = &self.params.conv_w[f * k_size * dim..(f + 1) * k_size * dim];
                conv[t * f_n + f] = (self.params.conv_b[f] + dot(w, window)).tanh();
            }
        }
        let mut pooled = vec![f64::NEG_INFINITY; f_n];
        let mut argmax = vec![0; f_n];
        for t in 0..rows {
            for f in 0..f_n {
                if conv[t * f_n + f] > pooled[f] {
                    pooled[f] = conv[t * f_n + f];
                    argmax[f] = t;
                }
            }
        }
        let act = self.head(pooled, argmax);
        (conv, act)
    }

    pub fn probabilities(&self, seq: &[usize]) -> [f64; N_CLASSES] {
        self.forward(seq).probs
    }

    /// `p(positive) − 0.5`; zero counts as positive.
    pub fn decision_value(&self, seq: &[usize]) -> f64 {
        self.probabilities(seq)[1] - 0.5
    }

    pub fn predict(&self, seq: &[usize]) -> bool {
        self.decision_value(seq) >= 0.0
    }

    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CnnModel, NeuralError> {
        let mut m: CnnModel = serde_json::from_str(&fs::read_to_string(path)?)?;
        if m.format_version != CNN_FORMAT_VERSION {
            return Err(NeuralError::UnsupportedVersion(m.format_version));
        }
        m.config.validate()?;
        let (f, k, h) = (m.config.n_filters, m.config.kernel_size, m.config.dense_units);
        let expected = [f * k * m.dim, f, h * f, h, N_CLASSES * h, N_CLASSES];
        let shapes_ok = m.params.groups().iter().zip(expected).all(|(g, n)| g.len() == n)
            && m.embedding.len() == (m.vocab.len() + 2) * m.dim;
        if !shapes_ok {
            return Err(NeuralError::InvalidConfig("parameter shapes do not match the configuration".into()));
        }
        m.index = build_index(&m.vocab);
        Ok(m)
    }
}
