//! Surface statistics of a comment and the lexicon sentiment scorer.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::corpus::Comment;
use crate::textprep::{is_punctuation, tokenize};

const GERMAN_LEXICON: &str = include_str!("../../data/sentiment_de.tsv");

/// Formal "Sie" inside a sentence.
static SIE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^\.!?]\s+Sie").expect("static pattern"));

/// Feature-name suffixes in the order of [`TextStats::values`].
pub const TEXT_STAT_NAMES: [&str; 6] = [
    "length",
    "avgwordlength",
    "capitalletters",
    "sie",
    "questions",
    "sentiment",
];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TextStats {
    pub length: usize,
    pub avg_word_length: f64,
    pub capital_letters: usize,
    pub sie_count: usize,
    pub question_count: usize,
    pub sentiment: f64,
}

impl TextStats {
    pub fn values(&self) -> [f64; 6] {
        [
            self.length as f64,
            self.avg_word_length,
            self.capital_letters as f64,
            self.sie_count as f64,
            self.question_count as f64,
            self.sentiment,
        ]
    }
}

/// Token polarities in [-1, 1].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(String, f64)>", into = "Vec<(String, f64)>")]
pub struct SentimentLexicon {
    polarity: HashMap<String, f64>,
}

impl From<Vec<(String, f64)>> for SentimentLexicon {
    fn from(v: Vec<(String, f64)>) -> Self {
        SentimentLexicon {
            polarity: v.into_iter().collect(),
        }
    }
}

impl From<SentimentLexicon> for Vec<(String, f64)> {
    fn from(l: SentimentLexicon) -> Self {
        let mut v: Vec<(String, f64)> = l.polarity.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

impl SentimentLexicon {
    pub fn german() -> Self {
        Self::parse(GERMAN_LEXICON).expect("shipped lexicon is valid")
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `token<TAB>polarity` lines; `#` comments and blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut polarity = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| FeatureError::Lexicon { line: i + 1, message };
            let (token, value) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected token<TAB>polarity".into()))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| bad(format!("polarity: {e}")))?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(bad(format!("polarity {value} outside [-1, 1]")));
            }
            polarity.insert(token.trim().to_lowercase(), value);
        }
        Ok(SentimentLexicon { polarity })
    }

    pub fn from_file(path: &Path) -> Result<Self, FeatureError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.polarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarity.is_empty()
    }

    pub fn polarity(&self, token: &str) -> Option<f64> {
        self.polarity.get(token).copied()
    }

    /// Mean polarity of lexicon hits, 0 without hits.
    pub fn score(&self, tokens: &[String]) -> f64 {
        let hits: Vec<f64> = tokens.iter().filter_map(|t| self.polarity(t)).collect();
        if hits.is_empty() {
            0.0
        } else {
            hits.iter().sum::<f64>() / hits.len() as f64
        }
    }
}

fn question_runs(s: &str) -> usize {
    let mut runs = 0;
    let mut prev = false;
    for ch in s.chars() {
        let q = ch == '?';
        if q && !prev {
            runs += 1;
        }
        prev = q;
    }
    runs
}

pub fn text_stats(c: &Comment, lexicon: &SentimentLexicon) -> TextStats {
    let joined = format!("{} {}", c.title, c.text);
    let words: Vec<usize> = joined
        .split_whitespace()
        .map(|w| w.trim_matches(is_punctuation).chars().count())
        .filter(|&n| n > 0)
        .collect();
    let avg_word_length = if words.is_empty() {
        0.0
    } else {
        words.iter().sum::<usize>() as f64 / words.len() as f64
    };
    // Title and text separately, so the pattern never spans the boundary.
    let parts = [c.title.as_str(), c.text.as_str()];
    TextStats {
        length: c.title.chars().count() + c.text.chars().count(),
        avg_word_length,
        capital_letters: joined.chars().filter(|ch| ch.is_uppercase()).count(),
        sie_count: parts.iter().map(|p| SIE.find_iter(p).count()).sum(),
        question_count: parts.iter().map(|p| question_runs(p)).sum(),
        sentiment: lexicon.score(&tokenize(&joined)),
    }
}
