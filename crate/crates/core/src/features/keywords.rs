//! Keyword sets, embedding-based enrichment and the whole-word pattern compiler.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use regex::{Regex, RegexBuilder, RegexSet, RegexSetBuilder};
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::corpus::{Addressee, Comment};
use crate::embeddings::WordEmbeddingModel;

/// Optional inflection suffixes accepted after every keyword.
pub const SUFFIXES: [&str; 6] = ["innen", "in", "es", "en", "s", "n"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub class: Addressee,
    pub seeds: Vec<String>,
    /// Seeds first, then embedding neighbours by descending similarity.
    pub enriched: Vec<String>,
    /// Seeds without an embedding; they stay in `enriched`.
    pub no_embedding: Vec<String>,
}

impl KeywordSet {
    pub fn new(class: Addressee, seeds: Vec<String>) -> Self {
        let seeds = normalize(seeds);
        KeywordSet {
            class,
            enriched: seeds.clone(),
            seeds,
            no_embedding: Vec::new(),
        }
    }

    /// One keyword per line; `#` comments and blank lines are ignored.
    pub fn parse(class: Addressee, text: &str) -> Self {
        let seeds = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        KeywordSet::new(class, seeds)
    }

    pub fn from_file(class: Addressee, path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(class, &fs::read_to_string(path)?))
    }

    /// The shipped German seed list for a class.
    pub fn default_for(class: Addressee) -> Self {
        let text = match class {
            Addressee::Media => include_str!("../../data/keywords/media.txt"),
            Addressee::Journalist => include_str!("../../data/keywords/journalist.txt"),
            Addressee::Moderator => include_str!("../../data/keywords/moderator.txt"),
        };
        Self::parse(class, text)
    }
}

fn normalize(words: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    words
        .into_iter()
        .map(|w| w.trim().to_lowercase())
        .filter(|w| !w.is_empty() && seen.insert(w.clone()))
        .collect()
}

/// Adds the `top_n` nearest neighbours (with similarity ≥ `min_sim`) of every
/// in-vocabulary seed.
pub fn enrich_keywords(
    class: Addressee,
    seeds: &[String],
    model: &WordEmbeddingModel,
    top_n: usize,
    min_sim: f64,
) -> KeywordSet {
    let base = KeywordSet::new(class, seeds.to_vec());
    let mut neighbours: Vec<(String, f64)> = Vec::new();
    let mut no_embedding = Vec::new();
    for seed in &base.seeds {
        match model.most_similar(seed, top_n) {
            Ok(list) => neighbours.extend(list.into_iter().filter(|(_, s)| *s >= min_sim)),
            Err(_) => no_embedding.push(seed.clone()),
        }
    }
    // Stable: equal similarities keep seed order.
    neighbours.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut seen: HashSet<String> = base.seeds.iter().cloned().collect();
    let mut enriched = base.seeds.clone();
    for (w, _) in neighbours {
        if seen.insert(w.clone()) {
            enriched.push(w);
        }
    }
    KeywordSet {
        class,
        seeds: base.seeds,
        enriched,
        no_embedding,
    }
}

fn keyword_pattern(keyword: &str) -> String {
    let body = keyword
        .split_whitespace()
        .map(regex::escape)
        .collect::<Vec<_>>()
        .join(r"\s+");
    format!("{body}(?:{})?", SUFFIXES.join("|"))
}

/// Case-insensitive whole-word alternation over keywords with the suffix rule.
pub fn compile_pattern(keywords: &[String], extra: &[String]) -> Result<Option<Regex>, FeatureError> {
    for p in extra {
        Regex::new(p).map_err(|e| FeatureError::InvalidPattern(format!("{p}: {e}")))?;
    }
    let mut words: Vec<&String> = keywords.iter().collect();
    // Longest first so that multi-word keywords win over their prefixes.
    words.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut alts: Vec<String> = words.iter().map(|w| keyword_pattern(w)).collect();
    alts.extend(extra.iter().map(|p| format!("(?:{p})")));
    if alts.is_empty() {
        return Ok(None);
    }
    let pattern = format!(r"\b(?:{})\b", alts.join("|"));
    RegexBuilder::new(&pattern)
        .case_insensitive(true)
        .build()
        .map(Some)
        .map_err(|e| FeatureError::InvalidPattern(e.to_string()))
}

fn comment_text(c: &Comment) -> String {
    format!("{} {}", c.title, c.text)
}

/// Compiled per-class patterns.
#[derive(Debug, Clone)]
pub struct PatternSet {
    classes: Vec<(Addressee, Option<Regex>)>,
}

impl PatternSet {
    pub fn compile(sets: &[KeywordSet], extra: &[(Addressee, String)]) -> Result<Self, FeatureError> {
        let classes = Addressee::ALL
            .iter()
            .map(|&a| {
                let words: Vec<String> = sets
                    .iter()
                    .filter(|s| s.class == a)
                    .flat_map(|s| s.enriched.iter().cloned())
                    .collect();
                let extra: Vec<String> = extra.iter().filter(|(c, _)| *c == a).map(|(_, p)| p.clone()).collect();
                compile_pattern(&words, &extra).map(|r| (a, r))
            })
            .collect::<Result<_, _>>()?;
        Ok(PatternSet { classes })
    }

    /// Matches over title and text, in `Addressee::ALL` order.
    pub fn count(&self, c: &Comment) -> [usize; 3] {
        let text = comment_text(c);
        let mut out = [0; 3];
        for (slot, (_, re)) in out.iter_mut().zip(&self.classes) {
            *slot = re.as_ref().map_or(0, |r| r.find_iter(&text).count());
        }
        out
    }

    pub fn count_class(&self, c: &Comment, class: Addressee) -> usize {
        self.count(c)[class as usize]
    }

    pub fn is_match(&self, c: &Comment, class: Addressee) -> bool {
        self.count_class(c, class) > 0
    }
}

/// Per-keyword containment flags (`keyword_<token>` features).
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    keywords: Vec<String>,
    set: Option<RegexSet>,
}

impl KeywordMatcher {
    /// Keywords of all sets, deduplicated in class order.
    pub fn new(sets: &[KeywordSet]) -> Result<Self, FeatureError> {
        let mut seen = HashSet::new();
        let mut keywords = Vec::new();
        for a in Addressee::ALL {
            for s in sets.iter().filter(|s| s.class == a) {
                for w in &s.enriched {
                    if seen.insert(w.clone()) {
                        keywords.push(w.clone());
                    }
                }
            }
        }
        let set = if keywords.is_empty() {
            None
        } else {
            let patterns: Vec<String> = keywords.iter().map(|k| format!(r"\b{}\b", keyword_pattern(k))).collect();
            Some(
                RegexSetBuilder::new(patterns)
                    .case_insensitive(true)
                    .build()
                    .map_err(|e| FeatureError::InvalidPattern(e.to_string()))?,
            )
        };
        Ok(KeywordMatcher { keywords, set })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    /// Indices of contained keywords, ascending.
    pub fn matches(&self, c: &Comment) -> Vec<usize> {
        match &self.set {
            Some(set) => set.matches(&comment_text(c)).into_iter().collect(),
            None => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn comment(title: &str, text: &str) -> Comment {
        let ts = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        Comment::new("c", title, text, ts)
    }

    fn set(class: Addressee, words: &[&str]) -> KeywordSet {
        KeywordSet::new(class, words.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn journalist_keyword_matches_once() {
        let p = PatternSet::compile(&[set(Addressee::Journalist, &["autor"])], &[]).unwrap();
        assert_eq!(p.count_class(&comment("", "Der Autor schreibt."), Addressee::Journalist), 1);
        assert_eq!(p.count(&comment("", "Der Autor schreibt.")), [0, 1, 0]);
    }

    #[test]
    fn empty_comment_has_no_matches() {
        let p = PatternSet::compile(&[set(Addressee::Journalist, &["autor"])], &[]).unwrap();
        assert_eq!(p.count(&comment("", "")), [0, 0, 0]);
    }

    #[test]
    fn inflection_suffixes() {
        let p = PatternSet::compile(&[set(Addressee::Journalist, &["autor"])], &[]).unwrap();
        assert_eq!(p.count_class(&comment("", "Autorin und Autoren"), Addressee::Journalist), 2);
        assert_eq!(p.count_class(&comment("", "Autorinnen, Autors"), Addressee::Journalist), 2);
        // Whole words only.
        assert_eq!(p.count_class(&comment("", "Autoritär und Koautor"), Addressee::Journalist), 0);
    }

    #[test]
    fn title_counts_too_and_case_insensitive() {
        let p = PatternSet::compile(&[set(Addressee::Moderator, &["zensur", "sysop"])], &[]).unwrap();
        assert_eq!(p.count(&comment("ZENSUR!", "Lieber Sysop, warum?")), [0, 0, 2]);
    }

    #[test]
    fn invalid_extra_pattern_is_rejected() {
        let err = PatternSet::compile(&[], &[(Addressee::Media, "(unclosed".into())]).unwrap_err();
        assert!(matches!(err, FeatureError::InvalidPattern(_)));
        let ok = PatternSet::compile(&[], &[(Addressee::Media, r"spiegel\s*online".into())]).unwrap();
        assert_eq!(ok.count(&comment("", "Spiegel Online lügt")), [1, 0, 0]);
    }

    #[test]
    fn keyword_matcher_flags_contained_keywords() {
        let m = KeywordMatcher::new(&[
            set(Addressee::Media, &["spon", "spiegel"]),
            set(Addressee::Moderator, &["sysop", "spon"]),
        ])
        .unwrap();
        assert_eq!(m.keywords(), &["spon", "spiegel", "sysop"]);
        assert_eq!(m.matches(&comment("", "SPON und der Sysop")), vec![0, 2]);
    }

    #[test]
    fn shipped_seed_lists_are_lowercase() {
        for a in Addressee::ALL {
            let s = KeywordSet::default_for(a);
            assert!(!s.seeds.is_empty());
            assert!(s.seeds.iter().all(|w| *w == w.to_lowercase()));
        }
    }

    #[test]
    fn enrichment_with_top_zero_keeps_seeds() {
        let model = tiny_model();
        let seeds = vec!["autor".to_string(), "unbekannt".to_string()];
        let ks = enrich_keywords(Addressee::Journalist, &seeds, &model, 0, 0.0);
        assert_eq!(ks.enriched, seeds);
        let ks = enrich_keywords(Addressee::Journalist, &seeds, &model, 2, 0.5);
        assert_eq!(ks.enriched, vec!["autor", "unbekannt", "verfasser"]);
        assert_eq!(ks.no_embedding, vec!["unbekannt"]);
    }

    fn tiny_model() -> WordEmbeddingModel {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        fs::write(&p, "3 2\nautor 1 0\nverfasser 0.9 0.1\nwetter 0 1\n").unwrap();
        WordEmbeddingModel::load(&p).unwrap()
    }
}
