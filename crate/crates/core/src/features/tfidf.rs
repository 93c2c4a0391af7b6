//! Unigram+bigram tf-idf with smoothed idf and L2-normalized rows.
//!
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, `tf` is the raw count.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::textprep::{ngrams, NgramRange, TokenStream, BIGRAM_SEPARATOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Sorted n-grams; the position is the column index.
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    document_frequencies: Vec<usize>,
    idf: Vec<f64>,
    n_docs: usize,
    range: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Range {
    Unigrams,
    UnigramsAndBigrams,
}

impl From<NgramRange> for Range {
    fn from(r: NgramRange) -> Self {
        match r {
            NgramRange::Unigrams => Range::Unigrams,
            NgramRange::UnigramsAndBigrams => Range::UnigramsAndBigrams,
        }
    }
}

impl From<Range> for NgramRange {
    fn from(r: Range) -> Self {
        match r {
            Range::Unigrams => NgramRange::Unigrams,
            Range::UnigramsAndBigrams => NgramRange::UnigramsAndBigrams,
        }
    }
}

pub fn idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl TfidfModel {
    /// Fits the vocabulary on `corpus`; `min_df` drops rarer n-grams.
    /// Returns `None` for an empty corpus.
    pub fn fit(corpus: &[TokenStream], range: NgramRange, min_df: usize) -> Option<Self> {
        if corpus.is_empty() {
            return None;
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let mut grams = ngrams(&doc.tokens, range);
            grams.sort_unstable();
            grams.dedup();
            for g in grams {
                *df.entry(g).or_default() += 1;
            }
        }
        let n_docs = corpus.len();
        let (terms, document_frequencies): (Vec<String>, Vec<usize>) =
            df.into_iter().filter(|&(_, d)| d >= min_df.max(1)).unzip();
        let idf = document_frequencies.iter().map(|&d| idf(n_docs, d)).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Some(TfidfModel {
            terms,
            index,
            document_frequencies,
            idf,
            n_docs,
            range: range.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn document_frequency(&self, column: usize) -> usize {
        self.document_frequencies[column]
    }

    pub fn idf(&self, column: usize) -> f64 {
        self.idf[column]
    }

    /// Sparse row sorted by column; unseen n-grams contribute nothing, and a
    /// row without known n-grams is empty.
    pub fn transform(&self, tokens: &[String]) -> Vec<(usize, f64)> {
        let mut cols: Vec<usize> = tokens.iter().filter_map(|t| self.index.get(t.as_str()).copied()).collect();
        if self.range == Range::UnigramsAndBigrams {
            let mut bigram = String::new();
            for w in tokens.windows(2) {
                bigram.clear();
                bigram.push_str(&w[0]);
                bigram.push(BIGRAM_SEPARATOR);
                bigram.push_str(&w[1]);
                cols.extend(self.index.get(bigram.as_str()).copied());
            }
        }
        cols.sort_unstable();
        let mut row: Vec<(usize, f64)> = Vec::new();
        for c in cols {
            match row.last_mut() {
                Some((last, tf)) if *last == c => *tf += 1.0,
                _ => row.push((c, 1.0)),
            }
        }
        row.iter_mut().for_each(|(c, v)| *v *= self.idf[*c]);
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        row
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }
}
