//! Text normalization and tokenization shared by embeddings, tf-idf and the CNN.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::Comment;

const GERMAN_STOPWORDS: &str = include_str!("../data/stopwords_de.txt");

/// Unicode punctuation plus German quotation marks, dashes and the ellipsis.
static PUNCTUATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{P}«»„“”‚‘’–—…]").expect("static punctuation pattern"));

pub fn is_punctuation(c: char) -> bool {
    let mut buf = [0u8; 4];
    PUNCTUATION.is_match(c.encode_utf8(&mut buf))
}

/// Replaces every punctuation character by a space.
pub fn strip_punctuation(s: &str) -> String {
    PUNCTUATION.replace_all(s, " ").into_owned()
}

/// Punctuation-stripped, lowercased, whitespace-split tokens.
pub fn tokenize(s: &str) -> Vec<String> {
    strip_punctuation(s)
        .to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    pub fn german() -> Self {
        Self::parse(GERMAN_STOPWORDS)
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// One lowercase token per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        StopWords { words }
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        StopWords {
            words: words.into_iter().map(|w| w.to_lowercase()).collect(),
        }
    }

    pub fn sorted(&self) -> Vec<String> {
        let mut v: Vec<String> = self.words.iter().cloned().collect();
        v.sort();
        v
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub source_id: String,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Comment preprocessing with a configurable stop-word list.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    stopwords: StopWords,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor::new(StopWords::german())
    }
}

impl Preprocessor {
    pub fn new(stopwords: StopWords) -> Self {
        Preprocessor { stopwords }
    }

    pub fn stopwords(&self) -> &StopWords {
        &self.stopwords
    }

    /// Title and text joined by a space, then normalized by [`Self::tokenize`].
    pub fn preprocess(&self, c: &Comment, remove_stopwords: bool) -> TokenStream {
        let joined = format!("{} {}", c.title, c.text);
        TokenStream {
            tokens: self.tokenize(&joined, remove_stopwords),
            source_id: c.id.clone(),
        }
    }

    /// Strip punctuation, lowercase, split on whitespace, optionally drop stop words.
    pub fn tokenize(&self, s: &str, remove_stopwords: bool) -> Vec<String> {
        let mut tokens = tokenize(s);
        if remove_stopwords {
            tokens.retain(|t| !self.stopwords.contains(t));
        }
        tokens
    }
}

pub const BIGRAM_SEPARATOR: char = '_';

/// Which n-gram orders to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgramRange {
    Unigrams,
    UnigramsAndBigrams,
}

/// Unigrams in order, followed by adjacent-pair bigrams joined with `_`.
pub fn ngrams(tokens: &[String], range: NgramRange) -> Vec<String> {
    let mut out: Vec<String> = tokens.to_vec();
    if range == NgramRange::UnigramsAndBigrams {
        out.extend(
            tokens
                .windows(2)
                .map(|w| format!("{}{}{}", w[0], BIGRAM_SEPARATOR, w[1])),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn comment(title: &str, text: &str) -> Comment {
        let ts = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        Comment::new("c", title, text, ts)
    }

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_word() {
        let p = Preprocessor::default();
        assert_eq!(p.preprocess(&comment("", "Hallo!"), true).tokens, toks(&["hallo"]));
    }

    #[test]
    fn stopwords_removed_after_lowercasing() {
        let p = Preprocessor::new(StopWords::parse("der\nist\n"));
        let ts = p.preprocess(&comment("Der Artikel", "ist GUT."), true);
        assert_eq!(ts.tokens, toks(&["artikel", "gut"]));
        let kept = p.preprocess(&comment("Der Artikel", "ist GUT."), false);
        assert_eq!(kept.tokens, toks(&["der", "artikel", "ist", "gut"]));
    }

    #[test]
    fn punctuation_only() {
        let p = Preprocessor::default();
        assert!(p.preprocess(&comment("", "???"), true).tokens.is_empty());
    }

    #[test]
    fn german_quotes_split_tokens() {
        let p = Preprocessor::new(StopWords::none());
        let t = p.tokenize("„Lügenpresse“–Vorwurf…und»so«weiter_hin", false);
        assert_eq!(t, toks(&["lügenpresse", "vorwurf", "und", "so", "weiter", "hin"]));
    }

    #[test]
    fn stopword_file_comments() {
        let s = StopWords::parse("# header\nder # article\n\nDie\n");
        assert!(s.contains("der"));
        assert!(s.contains("die"));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn ngram_cases() {
        assert_eq!(
            ngrams(&toks(&["a", "b", "c"]), NgramRange::UnigramsAndBigrams),
            toks(&["a", "b", "c", "a_b", "b_c"])
        );
        assert!(ngrams(&[], NgramRange::UnigramsAndBigrams).is_empty());
        assert_eq!(ngrams(&toks(&["x"]), NgramRange::UnigramsAndBigrams), toks(&["x"]));
        assert_eq!(ngrams(&toks(&["a", "b"]), NgramRange::Unigrams), toks(&["a", "b"]));
    }

    proptest! {
        #[test]
        fn preprocessing_is_idempotent(title in "\\PC{0,30}", text in "\\PC{1,80}", stop in any::<bool>()) {
            let p = Preprocessor::default();
            let first = p.preprocess(&comment(&title, &text), stop);
            let again = p.preprocess(&comment("", &first.joined()), stop);
            prop_assert_eq!(&first.tokens, &again.tokens);
            for t in &first.tokens {
                prop_assert!(!t.chars().any(|c| c.is_whitespace() || is_punctuation(c)));
                if stop {
                    prop_assert!(!p.stopwords().contains(t));
                }
            }
        }
    }
}
