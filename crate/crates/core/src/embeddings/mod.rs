//! Word embeddings (CBOW / skip-gram with negative sampling) and paragraph
//! vectors in the distributed-memory style, with inference for unseen
//! comments.
//!
//! Training runs either single-threaded, which is bit-reproducible for a
//! fixed seed, or with several workers that update the shared matrices
//! without locks. The multi-worker results vary from run to run.

mod io;
mod sgd;

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::textprep::TokenStream;

pub use sgd::{negative_sampling_gradients, negative_sampling_loss, NsExample, NsGradients, Rows};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("no token occurs at least {min_count} times; vocabulary would be empty")]
    EmptyVocabulary { min_count: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("word `{0}` is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainingMethod {
    Cbow,
    SkipGram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WordEmbeddingParams {
    pub dim: usize,
    pub window: usize,
    pub min_count: usize,
    pub epochs: usize,
    pub method: TrainingMethod,
    pub negative_samples: usize,
    pub seed: u64,
    /// 1 = deterministic single-worker mode.
    pub workers: usize,
    pub alpha_start: f64,
    pub alpha_end: f64,
}

impl Default for WordEmbeddingParams {
    fn default() -> Self {
        WordEmbeddingParams {
            dim: 300,
            window: 5,
            min_count: 50,
            epochs: 5,
            method: TrainingMethod::Cbow,
            negative_samples: 5,
            seed: 1,
            workers: 1,
            alpha_start: 0.025,
            alpha_end: 0.0001,
        }
    }
}

impl WordEmbeddingParams {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidParams(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if self.min_count == 0 {
            return bad("min_count must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.negative_samples == 0 {
            return bad("negative_samples must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        if !(self.alpha_start > 0.0 && self.alpha_end > 0.0 && self.alpha_end <= self.alpha_start) {
            return bad("learning rates must satisfy 0 < alpha_end <= alpha_start");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceParams {
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for InferenceParams {
    fn default() -> Self {
        InferenceParams {
            steps: 50,
            learning_rate: 0.025,
            seed: 1,
        }
    }
}

/// Token to row mapping, ordered by descending count then token.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<'a, I>(tokens: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a String>,
    {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count as u64)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self::from_pairs(kept.into_iter().map(|(t, c)| (t.to_string(), c)))
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, u64)>>(pairs: I) -> Self {
        let (tokens, counts): (Vec<String>, Vec<u64>) = pairs.into_iter().unzip();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, counts, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.get(t)).collect()
    }
}

/// Negative-sampling noise distribution: unigram counts raised to 0.75.
#[derive(Debug, Clone)]
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(vocab: &Vocab) -> Self {
        let mut acc = 0.0;
        let cumulative = vocab
            .counts
            .iter()
            .map(|&c| {
                acc += (c.max(1) as f64).powf(0.75);
                acc
            })
            .collect();
        NoiseTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    fn fill(&self, rng: &mut ChaCha8Rng, target: usize, k: usize, out: &mut Vec<usize>) {
        out.clear();
        for _ in 0..k {
            let s = self.sample(rng);
            if s != target {
                out.push(s);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingModel {
    pub(crate) vocab: Vocab,
    pub(crate) dim: usize,
    /// Input vectors, row-major |V| x dim.
    pub(crate) vectors: Vec<f64>,
    /// Output (negative-sampling) vectors; absent for models loaded from a bare vector file.
    pub(crate) output: Option<Vec<f64>>,
    pub params: WordEmbeddingParams,
    /// Mean negative-sampling loss per training example, one entry per epoch.
    pub loss_history: Vec<f64>,
}

impl WordEmbeddingModel {
    /// A model from bare vectors (row-major, one row per token, count 1 each).
    pub fn from_vectors(tokens: Vec<String>, vectors: Vec<f64>, dim: usize) -> Result<Self, EmbeddingError> {
        if dim == 0 || vectors.len() != tokens.len() * dim {
            return Err(EmbeddingError::DimensionMismatch { left: vectors.len(), right: tokens.len() * dim });
        }
        Ok(WordEmbeddingModel {
            vocab: Vocab::from_pairs(tokens.into_iter().map(|t| (t, 1))),
            dim,
            vectors,
            output: None,
            params: WordEmbeddingParams { dim, ..WordEmbeddingParams::default() },
            loss_history: Vec::new(),
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.get(word).map(|i| self.row(i))
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.get(word).is_some()
    }

    /// The `n` nearest vocabulary words by cosine similarity, excluding the query.
    pub fn most_similar(&self, word: &str, n: usize) -> Result<Vec<(String, f64)>, EmbeddingError> {
        let q = self
            .vocab
            .get(word)
            .ok_or_else(|| EmbeddingError::OutOfVocabulary(word.to_string()))?;
        if n == 0 {
            return Ok(Vec::new());
        }
        let query = self.row(q);
        let mut scored: Vec<(usize, f64)> = (0..self.vocab.len())
            .filter(|&i| i != q)
            .map(|i| (i, cosine(query, self.row(i))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(n);
        Ok(scored
            .into_iter()
            .map(|(i, s)| (self.vocab.token(i).to_string(), s))
            .collect())
    }

    /// Mean of the vectors of the in-vocabulary words, or `None` if none are known.
    pub fn average(&self, words: &[String]) -> Option<Vec<f64>> {
        let rows: Vec<&[f64]> = words.iter().filter_map(|w| self.vector(w)).collect();
        if rows.is_empty() {
            return None;
        }
        let mut avg = vec![0.0; self.dim];
        for r in &rows {
            for (a, x) in avg.iter_mut().zip(r.iter()) {
                *a += x;
            }
        }
        let n = rows.len() as f64;
        avg.iter_mut().for_each(|a| *a /= n);
        Some(avg)
    }
}

/// Cosine similarity; 0 when either vector is zero.
fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0)
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(cosine(u, v))
}

pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    cosine_similarity(u, v).map(|s| 1.0 - s)
}

/// Parameter matrices shared by the training loops.
struct Matrices<'a, S: ?Sized> {
    words: &'a S,
    docs: Option<&'a S>,
    output: &'a S,
}

fn init_rows(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..rows * dim).map(|_| rng.gen_range(-half..half)).collect()
}

/// A training unit: encoded tokens, plus the document row for paragraph vectors.
struct Sentence {
    words: Vec<usize>,
    doc: Option<usize>,
}

struct Schedule {
    start: f64,
    end: f64,
    total: f64,
}

impl Schedule {
    fn alpha(&self, processed: f64) -> f64 {
        let progress = (processed / self.total.max(1.0)).min(1.0);
        (self.start - (self.start - self.end) * progress).max(self.end)
    }
}

/// One pass over `sentences`; returns (summed loss, number of examples).
#[allow(clippy::too_many_arguments)]
fn run_epoch<S: sgd::Store + ?Sized>(
    m: &Matrices<'_, S>,
    sentences: &[Sentence],
    params: &WordEmbeddingParams,
    noise: &NoiseTable,
    rng: &mut ChaCha8Rng,
    schedule: &Schedule,
    processed: &mut f64,
    scale: f64,
) -> (f64, usize) {
    let dim = params.dim;
    let mut scratch = sgd::Scratch::new(dim, params.negative_samples);
    let mut negatives = Vec::with_capacity(params.negative_samples);
    let mut context = Vec::with_capacity(2 * params.window);
    let (mut loss, mut n) = (0.0, 0usize);
    let update = sgd::Update::ALL;

    for s in sentences {
        let len = s.words.len();
        for pos in 0..len {
            let alpha = schedule.alpha(*processed * scale);
            *processed += 1.0;
            let lo = pos.saturating_sub(params.window);
            let hi = (pos + params.window + 1).min(len);
            context.clear();
            context.extend((lo..hi).filter(|&j| j != pos).map(|j| s.words[j]));
            let target = s.words[pos];
            match (params.method, s.doc) {
                (TrainingMethod::SkipGram, None) => {
                    for &c in &context {
                        noise.fill(rng, target, params.negative_samples, &mut negatives);
                        let ex = NsExample {
                            words: std::slice::from_ref(&c),
                            doc: None,
                            target,
                            negatives: &negatives,
                        };
                        loss += sgd::step(m.words, m.words, m.output, dim, &ex, alpha, update, &mut scratch);
                        n += 1;
                    }
                }
                _ => {
                    if context.is_empty() && s.doc.is_none() {
                        continue;
                    }
                    noise.fill(rng, target, params.negative_samples, &mut negatives);
                    let ex = NsExample {
                        words: &context,
                        doc: s.doc,
                        target,
                        negatives: &negatives,
                    };
                    let docs = m.docs.unwrap_or(m.words);
                    loss += sgd::step(m.words, docs, m.output, dim, &ex, alpha, update, &mut scratch);
                    n += 1;
                }
            }
        }
    }
    (loss, n)
}

/// Runs all epochs, single-threaded or lock-free multi-worker, mutating the matrices in place.
fn train_matrices(
    words: &mut [f64],
    docs: Option<&mut [f64]>,
    output: &mut [f64],
    sentences: &[Sentence],
    params: &WordEmbeddingParams,
    noise: &NoiseTable,
    rng_seed: u64,
) -> Vec<f64> {
    let total_words: usize = sentences.iter().map(|s| s.words.len()).sum();
    let schedule = Schedule {
        start: params.alpha_start,
        end: params.alpha_end,
        total: (total_words * params.epochs) as f64,
    };
    let mut history = Vec::with_capacity(params.epochs);

    if params.workers <= 1 {
        use std::cell::Cell;
        let words = Cell::from_mut(words).as_slice_of_cells();
        let docs = docs.map(|d| Cell::from_mut(d).as_slice_of_cells());
        let output = Cell::from_mut(output).as_slice_of_cells();
        let m = Matrices { words, docs, output };
        let mut rng = seed::rng(rng_seed);
        let mut processed = 0.0;
        for _ in 0..params.epochs {
            let (loss, n) = run_epoch(&m, sentences, params, noise, &mut rng, &schedule, &mut processed, 1.0);
            history.push(loss / n.max(1) as f64);
        }
        return history;
    }

    let to_atomic = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect::<Vec<_>>();
    let a_words = to_atomic(words);
    let a_docs = docs.as_deref().map(to_atomic);
    let a_out = to_atomic(output);
    let workers = params.workers.min(sentences.len().max(1));
    let chunk = sentences.len().div_ceil(workers).max(1);
    for epoch in 0..params.epochs {
        let results: Vec<(f64, usize)> = std::thread::scope(|scope| {
            let handles: Vec<_> = sentences
                .chunks(chunk)
                .enumerate()
                .map(|(w, shard)| {
                    let m = Matrices {
                        words: a_words.as_slice(),
                        docs: a_docs.as_deref(),
                        output: a_out.as_slice(),
                    };
                    let schedule = &schedule;
                    let start = (epoch * total_words) as f64;
                    scope.spawn(move || {
                        let mut rng = seed::rng(seed::derive_indexed(rng_seed, &format!("worker/{epoch}"), w));
                        // Each worker sees 1/workers of the words; scale its progress.
                        let mut processed = start / workers as f64;
                        run_epoch(&m, shard, params, noise, &mut rng, schedule, &mut processed, workers as f64)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let (loss, n) = results.iter().fold((0.0, 0), |acc, r| (acc.0 + r.0, acc.1 + r.1));
        history.push(loss / n.max(1) as f64);
    }
    let from_atomic = |dst: &mut [f64], src: &[AtomicU64]| {
        for (d, s) in dst.iter_mut().zip(src) {
            *d = f64::from_bits(s.load(Ordering::Relaxed));
        }
    };
    from_atomic(words, &a_words);
    if let (Some(d), Some(a)) = (docs, a_docs.as_ref()) {
        from_atomic(d, a);
    }
    from_atomic(output, &a_out);
    history
}

fn build_vocab(corpus: &[TokenStream], params: &WordEmbeddingParams) -> Result<Vocab, EmbeddingError> {
    params.validate()?;
    if corpus.iter().all(|t| t.tokens.is_empty()) {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let vocab = Vocab::build(corpus.iter().flat_map(|t| t.tokens.iter()), params.min_count);
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary {
            min_count: params.min_count,
        });
    }
    Ok(vocab)
}

pub fn train_word_embeddings(
    corpus: &[TokenStream],
    params: &WordEmbeddingParams,
) -> Result<WordEmbeddingModel, EmbeddingError> {
    let vocab = build_vocab(corpus, params)?;
    let dim = params.dim;
    let mut init_rng = seed::rng(seed::derive_seed(params.seed, "word-init"));
    let mut vectors = init_rows(&mut init_rng, vocab.len(), dim);
    let mut output = vec![0.0; vocab.len() * dim];
    let sentences: Vec<Sentence> = corpus
        .iter()
        .map(|t| Sentence {
            words: vocab.encode(&t.tokens),
            doc: None,
        })
        .filter(|s| !s.words.is_empty())
        .collect();
    let noise = NoiseTable::new(&vocab);
    let loss_history = train_matrices(
        &mut vectors,
        None,
        &mut output,
        &sentences,
        params,
        &noise,
        seed::derive_seed(params.seed, "word-train"),
    );
    Ok(WordEmbeddingModel {
        vocab,
        dim,
        vectors,
        output: Some(output),
        params: params.clone(),
        loss_history,
    })
}

/// A vector for a comment, with a flag set when it is the zero vector
/// because no token was known.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub vector: Vec<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbeddingModel {
    pub word_model: WordEmbeddingModel,
    pub(crate) doc_ids: Vec<String>,
    pub(crate) doc_index: HashMap<String, usize>,
    pub(crate) doc_vectors: Vec<f64>,
    /// Documents without any in-vocabulary token; their vectors are zero.
    pub(crate) empty_docs: BTreeSet<String>,
    pub inference: InferenceParams,
}

/// Trains word and paragraph vectors jointly. Documents always use the
/// distributed-memory input (document row averaged with the context words),
/// independent of `params.method`.
pub fn train_doc_embeddings(
    corpus: &[TokenStream],
    params: &WordEmbeddingParams,
    inference: &InferenceParams,
) -> Result<DocEmbeddingModel, EmbeddingError> {
    let vocab = build_vocab(corpus, params)?;
    let dim = params.dim;
    let mut doc_index = HashMap::new();
    for (i, t) in corpus.iter().enumerate() {
        if doc_index.insert(t.source_id.clone(), i).is_some() {
            return Err(EmbeddingError::DuplicateDocument(t.source_id.clone()));
        }
    }
    let mut init_rng = seed::rng(seed::derive_seed(params.seed, "doc-init"));
    let mut vectors = init_rows(&mut init_rng, vocab.len(), dim);
    let mut docs = init_rows(&mut init_rng, corpus.len(), dim);
    let mut output = vec![0.0; vocab.len() * dim];

    let mut empty_docs = BTreeSet::new();
    let mut sentences = Vec::with_capacity(corpus.len());
    for (i, t) in corpus.iter().enumerate() {
        let words = vocab.encode(&t.tokens);
        if words.is_empty() {
            empty_docs.insert(t.source_id.clone());
            docs[i * dim..(i + 1) * dim].fill(0.0);
        } else {
            sentences.push(Sentence { words, doc: Some(i) });
        }
    }
    let doc_params = WordEmbeddingParams {
        method: TrainingMethod::Cbow,
        ..params.clone()
    };
    let noise = NoiseTable::new(&vocab);
    let loss_history = train_matrices(
        &mut vectors,
        Some(&mut docs),
        &mut output,
        &sentences,
        &doc_params,
        &noise,
        seed::derive_seed(params.seed, "doc-train"),
    );
    Ok(DocEmbeddingModel {
        word_model: WordEmbeddingModel {
            vocab,
            dim,
            vectors,
            output: Some(output),
            params: params.clone(),
            loss_history,
        },
        doc_ids: corpus.iter().map(|t| t.source_id.clone()).collect(),
        doc_index,
        doc_vectors: docs,
        empty_docs,
        inference: inference.clone(),
    })
}

impl DocEmbeddingModel {
    pub fn dim(&self) -> usize {
        self.word_model.dim
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// The trained vector of a training document.
    pub fn trained(&self, id: &str) -> Option<DocVector> {
        self.doc_index.get(id).map(|&i| DocVector {
            vector: self.doc_vectors[i * self.dim()..(i + 1) * self.dim()].to_vec(),
            flagged: self.empty_docs.contains(id),
        })
    }

    pub fn is_flagged(&self, id: &str) -> bool {
        self.empty_docs.contains(id)
    }

    /// Trained vector when `tokens.source_id` was part of training, inferred otherwise.
    pub fn vector_for(&self, tokens: &TokenStream) -> DocVector {
        self.trained(&tokens.source_id)
            .unwrap_or_else(|| self.infer(&tokens.tokens))
    }

    /// Infers a vector for unseen tokens by SGD on a fresh document row;
    /// word and output matrices stay untouched.
    pub fn infer(&self, tokens: &[String]) -> DocVector {
        let dim = self.dim();
        let wm = &self.word_model;
        let words = wm.vocab.encode(tokens);
        let output = match &wm.output {
            Some(o) if !words.is_empty() => o,
            _ => {
                return DocVector {
                    vector: vec![0.0; dim],
                    flagged: true,
                }
            }
        };
        let params = &wm.params;
        let noise = NoiseTable::new(&wm.vocab);
        let mut rng = seed::rng(seed::derive_seed(self.inference.seed, "infer"));
        let mut doc = init_rows(&mut rng, 1, dim);
        let schedule = Schedule {
            start: self.inference.learning_rate,
            end: params.alpha_end.min(self.inference.learning_rate),
            total: (self.inference.steps * words.len()) as f64,
        };
        let mut scratch = sgd::Scratch::new(dim, params.negative_samples);
        let mut negatives = Vec::with_capacity(params.negative_samples);
        let mut context = Vec::with_capacity(2 * params.window);
        let mut processed = 0.0;
        {
            let doc_cells = std::cell::Cell::from_mut(doc.as_mut_slice()).as_slice_of_cells();
            let len = words.len();
            for _ in 0..self.inference.steps {
                for pos in 0..len {
                    let alpha = schedule.alpha(processed);
                    processed += 1.0;
                    let lo = pos.saturating_sub(params.window);
                    let hi = (pos + params.window + 1).min(len);
                    context.clear();
                    context.extend((lo..hi).filter(|&j| j != pos).map(|j| words[j]));
                    noise.fill(&mut rng, words[pos], params.negative_samples, &mut negatives);
                    let ex = NsExample {
                        words: &context,
                        doc: Some(0),
                        target: words[pos],
                        negatives: &negatives,
                    };
                    sgd::step(
                        wm.vectors.as_slice(),
                        doc_cells,
                        output.as_slice(),
                        dim,
                        &ex,
                        alpha,
                        sgd::Update::DOC_ONLY,
                        &mut scratch,
                    );
                }
            }
        }
        DocVector {
            vector: doc,
            flagged: false,
        }
    }
}

#[cfg(test)]
mod tests;
