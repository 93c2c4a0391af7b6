//! Candidate sampling for annotation (keyword patterns, embedding
//! similarity, random), batch export and merging of coder annotations.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Comment, CorpusError, Label, LabelSet, LabeledDataset};
use crate::embeddings::{cosine_similarity, DocEmbeddingModel, EmbeddingError, WordEmbeddingModel};
use crate::features::{FeatureError, KeywordSet, PatternSet};
use crate::seed;
use crate::textprep::Preprocessor;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("no keyword of class {0} has an embedding")]
    AllKeywordsOov(String),
    #[error("unknown comment id `{0}`")]
    UnknownId(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Pattern,
    Similarity,
    Random,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Pattern => "pattern",
            Provenance::Similarity => "similarity",
            Provenance::Random => "random",
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Provenance::Pattern, Provenance::Similarity, Provenance::Random]
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown provenance {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub comment: Comment,
    pub provenance: Provenance,
    pub score: Option<f64>,
}

/// No duplicate comment ids; similarity batches are sorted by descending score.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationBatch {
    pub batch_id: String,
    pub items: Vec<BatchItem>,
}

impl AnnotationBatch {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.comment.id.as_str()).collect()
    }
}

/// The first `n` comments, in dataset order, that match the class pattern
/// built from `ks`.
pub fn sample_by_pattern(ds: &LabeledDataset, ks: &KeywordSet, n: usize) -> Result<AnnotationBatch, SamplingError> {
    let patterns = PatternSet::compile(std::slice::from_ref(ks), &[])?;
    let items = ds
        .comments()
        .filter(|c| patterns.is_match(c, ks.class))
        .take(n)
        .map(|c| BatchItem { comment: c.clone(), provenance: Provenance::Pattern, score: None })
        .collect();
    Ok(AnnotationBatch { batch_id: format!("pattern-{}", ks.class.slug()), items })
}

/// The `n` comments whose document vectors are most cosine-similar to the
/// mean word vector of the in-vocabulary keywords. Ties keep dataset order.
pub fn sample_by_similarity(
    ds: &LabeledDataset,
    ks: &KeywordSet,
    m: &WordEmbeddingModel,
    dm: &DocEmbeddingModel,
    pre: &Preprocessor,
    n: usize,
) -> Result<AnnotationBatch, SamplingError> {
    let target = m
        .average(&ks.enriched)
        .ok_or_else(|| SamplingError::AllKeywordsOov(ks.class.label().to_string()))?;
    let mut scored: Vec<(usize, f64)> = ds
        .comments()
        .enumerate()
        .map(|(i, c)| Ok((i, cosine_similarity(&dm.vector_for(&pre.preprocess(c, true)).vector, &target)?)))
        .collect::<Result<_, SamplingError>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    let items = scored
        .into_iter()
        .map(|(i, s)| BatchItem { comment: ds.entries[i].comment.clone(), provenance: Provenance::Similarity, score: Some(s) })
        .collect();
    Ok(AnnotationBatch { batch_id: format!("similarity-{}", ks.class.slug()), items })
}

/// `n` comments drawn without replacement, kept in dataset order.
pub fn sample_random(ds: &LabeledDataset, n: usize, seed: u64) -> AnnotationBatch {
    let mut rng = seed::rng(seed::derive_seed(seed, "random-sample"));
    let mut picked = index::sample(&mut rng, ds.len(), n.min(ds.len())).into_vec();
    picked.sort_unstable();
    let items = picked
        .into_iter()
        .map(|i| BatchItem { comment: ds.entries[i].comment.clone(), provenance: Provenance::Random, score: None })
        .collect();
    AnnotationBatch { batch_id: "random".into(), items }
}

/// Removes comments that occur in more than one batch. A comment stays in
/// the first pattern batch that contains it, or in the first batch at all
/// if no pattern batch does.
pub fn dedup_batches(batches: Vec<AnnotationBatch>) -> Vec<AnnotationBatch> {
    let mut owner: HashMap<String, usize> = HashMap::new();
    for pass_pattern in [true, false] {
        for (b, batch) in batches.iter().enumerate() {
            for item in &batch.items {
                if (item.provenance == Provenance::Pattern) == pass_pattern {
                    owner.entry(item.comment.id.clone()).or_insert(b);
                }
            }
        }
    }
    batches
        .into_iter()
        .enumerate()
        .map(|(b, mut batch)| {
            let mut seen = HashSet::new();
            batch.items.retain(|i| owner[&i.comment.id] == b && seen.insert(i.comment.id.clone()));
            batch
        })
        .collect()
}

pub const BATCH_COLUMNS: [&str; 7] = ["batch_id", "comment_id", "title", "text", "provenance", "score", "label"];

fn label_vocabulary() -> String {
    Label::ALL.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(";")
}

/// CSV with a `# labels: ...` header line naming the valid labels; the
/// `label` column is left empty for the coders.
pub fn write_batches<W: Write>(mut w: W, batches: &[AnnotationBatch]) -> Result<(), SamplingError> {
    writeln!(w, "# labels: {} (separate several with ';')", label_vocabulary())?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BATCH_COLUMNS)?;
    for b in batches {
        for item in &b.items {
            let score = item.score.map(|s| s.to_string()).unwrap_or_default();
            out.write_record([
                b.batch_id.as_str(),
                &item.comment.id,
                &item.comment.title,
                &item.comment.text,
                item.provenance.as_str(),
                &score,
                "",
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_batches(path: &Path, batches: &[AnnotationBatch]) -> Result<(), SamplingError> {
    write_batches(std::io::BufWriter::new(File::create(path)?), batches)
}

/// Reads a returned batch file: `(comment id, labels)` for every row whose
/// label cell is filled in. `#` lines before the header are skipped.
pub fn read_coded<R: Read>(r: R) -> Result<Vec<(String, LabelSet)>, SamplingError> {
    let mut text = String::new();
    let mut skipped = 0;
    for line in BufReader::new(r).lines() {
        let line = line?;
        if text.is_empty() && line.starts_with('#') {
            skipped += 1;
            continue;
        }
        text.push_str(&line);
        text.push('\n');
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| SamplingError::Format {
            line: skipped + 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (id_col, label_col) = (col("comment_id")?, col("label")?);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = skipped + i + 2;
        let label = rec.get(label_col).unwrap_or("").trim();
        if label.is_empty() {
            continue;
        }
        let labels = LabelSet::parse_list(label).map_err(|e| SamplingError::Format { line, message: e.to_string() })?;
        out.push((rec.get(id_col).unwrap_or("").to_string(), labels));
    }
    Ok(out)
}

pub fn load_coded(path: &Path) -> Result<Vec<(String, LabelSet)>, SamplingError> {
    read_coded(File::open(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergePolicy {
    /// A label set given by a strict majority of the codings wins.
    Majority,
    /// All codings must agree.
    Strict,
}

impl FromStr for MergePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" | "majority-with-third-coder" => Ok(MergePolicy::Majority),
            "strict" => Ok(MergePolicy::Strict),
            _ => Err(format!("unknown merge policy {s:?}; expected majority or strict")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeResult {
    /// `ds` with the labels of every resolved comment replaced.
    pub dataset: LabeledDataset,
    pub merged: usize,
    /// Unresolved comments with all codings they received; left unchanged.
    pub flagged: Vec<(String, Vec<LabelSet>)>,
}

/// Combines codings of several coders (any number per comment). Agreement
/// means identical label sets.
pub fn merge_annotations(
    ds: &LabeledDataset,
    coded: &[(String, LabelSet)],
    policy: MergePolicy,
) -> Result<MergeResult, SamplingError> {
    let index: HashMap<&str, usize> = ds.comments().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();
    let mut by_id: BTreeMap<usize, Vec<LabelSet>> = BTreeMap::new();
    for (id, labels) in coded {
        let &i = index.get(id.as_str()).ok_or_else(|| SamplingError::UnknownId(id.clone()))?;
        by_id.entry(i).or_default().push(*labels);
    }
    let mut dataset = ds.clone();
    let mut merged = 0;
    let mut flagged = Vec::new();
    for (i, codings) in by_id {
        let mut counts: Vec<(LabelSet, usize)> = Vec::new();
        for &c in &codings {
            match counts.iter_mut().find(|(l, _)| *l == c) {
                Some(e) => e.1 += 1,
                None => counts.push((c, 1)),
            }
        }
        let (top, n) = counts.iter().copied().max_by_key(|&(_, n)| n).expect("at least one coding");
        let resolved = match policy {
            MergePolicy::Majority => n >= 2 && 2 * n > codings.len(),
            MergePolicy::Strict => n == codings.len(),
        };
        if resolved {
            dataset.entries[i].labels = top;
            merged += 1;
        } else {
            flagged.push((ds.entries[i].comment.id.clone(), codings));
        }
    }
    Ok(MergeResult { dataset, merged, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Addressee;
    use crate::synthetic::template_dataset;
    use chrono::NaiveDate;

    fn ds_of(texts: &[&str]) -> LabeledDataset {
        let ts = NaiveDate::from_ymd_opt(2018, 3, 1).unwrap().and_hms_opt(12, 0, 0).unwrap();
        let mut ds = LabeledDataset::new("fixture");
        for (i, t) in texts.iter().enumerate() {
            ds.push(Comment::new(format!("c{i}"), "", *t, ts), LabelSet::empty()).unwrap();
        }
        ds
    }

    fn moderator_keywords() -> KeywordSet {
        KeywordSet::new(Addressee::Moderator, vec!["sysop".into(), "zensur".into()])
    }

    #[test]
    fn pattern_sampling() {
        let ds = ds_of(&["Lieber Sysop, warum?", "Das Wetter ist schön.", "Zensur!", "Noch mehr Zensur hier", "Nichts"]);
        let ks = moderator_keywords();
        assert!(sample_by_pattern(&ds, &ks, 0).unwrap().is_empty());
        let all = sample_by_pattern(&ds, &ks, 10).unwrap();
        assert_eq!(all.ids(), vec!["c0", "c2", "c3"]);
        assert_eq!(sample_by_pattern(&ds, &ks, 2).unwrap().ids(), vec!["c0", "c2"]);
        assert!(all.items.iter().all(|i| i.provenance == Provenance::Pattern));
    }

    fn planted_doc_model(ds: &LabeledDataset, vectors: &[[f64; 2]]) -> (WordEmbeddingModel, DocEmbeddingModel) {
        let wm = WordEmbeddingModel::from_vectors(vec!["sysop".into(), "wetter".into()], vec![1.0, 0.0, 0.0, 1.0], 2).unwrap();
        let doc_ids: Vec<String> = ds.comments().map(|c| c.id.clone()).collect();
        let dm = DocEmbeddingModel {
            word_model: wm.clone(),
            doc_index: doc_ids.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect(),
            doc_ids,
            doc_vectors: vectors.iter().flatten().copied().collect(),
            empty_docs: Default::default(),
            inference: Default::default(),
        };
        (wm, dm)
    }

    #[test]
    fn similarity_ranking() {
        let ds = ds_of(&["x", "y", "z"]);
        let (wm, dm) = planted_doc_model(&ds, &[[0.0, 1.0], [2.0, 0.0], [1.0, 1.0]]);
        let ks = KeywordSet::new(Addressee::Moderator, vec!["sysop".into(), "unbekannt".into()]);
        let pre = Preprocessor::default();
        let b = sample_by_similarity(&ds, &ks, &wm, &dm, &pre, 10).unwrap();
        assert_eq!(b.ids(), vec!["c1", "c2", "c0"]);
        let scores: Vec<f64> = b.items.iter().map(|i| i.score.unwrap()).collect();
        assert!((scores[0] - 1.0).abs() < 1e-12);
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(sample_by_similarity(&ds, &ks, &wm, &dm, &pre, 1).unwrap().ids(), vec!["c1"]);
        let oov = KeywordSet::new(Addressee::Media, vec!["spiegel".into()]);
        assert!(matches!(sample_by_similarity(&ds, &oov, &wm, &dm, &pre, 3), Err(SamplingError::AllKeywordsOov(_))));
    }

    #[test]
    fn random_sampling_is_seeded() {
        let ds = template_dataset(1, 50);
        let a = sample_random(&ds, 10, 4);
        assert_eq!(a, sample_random(&ds, 10, 4));
        assert_ne!(a, sample_random(&ds, 10, 5));
        assert_eq!(a.len(), 10);
        assert_eq!(sample_random(&ds, 500, 4).len(), 50);
    }

    #[test]
    fn pattern_provenance_wins_dedup() {
        let ds = ds_of(&["a", "b", "c", "d"]);
        let item = |i: usize, p| BatchItem { comment: ds.entries[i].comment.clone(), provenance: p, score: None };
        let sim = AnnotationBatch { batch_id: "s".into(), items: vec![item(0, Provenance::Similarity), item(1, Provenance::Similarity)] };
        let pat = AnnotationBatch { batch_id: "p".into(), items: vec![item(1, Provenance::Pattern), item(2, Provenance::Pattern)] };
        let rnd = AnnotationBatch { batch_id: "r".into(), items: vec![item(0, Provenance::Random), item(3, Provenance::Random)] };
        let out = dedup_batches(vec![sim, pat, rnd]);
        assert_eq!(out[0].ids(), vec!["c0"]);
        assert_eq!(out[1].ids(), vec!["c1", "c2"]);
        assert_eq!(out[2].ids(), vec!["c3"]);
    }

    #[test]
    fn export_and_read_back() {
        let ds = ds_of(&["Lieber Sysop, warum?", "Zensur, \"sagt\" er"]);
        let batch = sample_by_pattern(&ds, &moderator_keywords(), 5).unwrap();
        let mut buf = Vec::new();
        write_batches(&mut buf, &[batch]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# labels: Media;Journalist;Moderator;Meta;NonMeta"));
        assert!(read_coded(text.as_bytes()).unwrap().is_empty());
        let filled = text.replacen(",pattern,,\n", ",pattern,,Meta;Moderator\n", 1);
        let coded = read_coded(filled.as_bytes()).unwrap();
        assert_eq!(coded, vec![("c0".to_string(), LabelSet::meta(&[Addressee::Moderator]))]);
        let bad = text.replacen(",pattern,,\n", ",pattern,,Nonsense\n", 1);
        assert!(matches!(read_coded(bad.as_bytes()), Err(SamplingError::Format { .. })));
    }

    #[test]
    fn merge_policies() {
        let ds = ds_of(&["a", "b", "c", "d", "e"]);
        let meta = LabelSet::meta(&[Addressee::Media]);
        let non = LabelSet::non_meta();
        let jour = LabelSet::meta(&[Addressee::Journalist]);
        let coded: Vec<(String, LabelSet)> = vec![
            ("c0", meta), ("c0", meta), ("c0", non),
            ("c1", non), ("c1", non), ("c1", non),
            ("c2", meta), ("c2", non), ("c2", jour),
            ("c3", jour), ("c3", jour), ("c3", meta),
            ("c4", non), ("c4", jour), ("c4", non),
        ]
        .into_iter()
        .map(|(i, l)| (i.to_string(), l))
        .collect();
        let m = merge_annotations(&ds, &coded, MergePolicy::Majority).unwrap();
        assert_eq!(m.merged, 4);
        assert_eq!(m.flagged.len(), 1);
        assert_eq!(m.flagged[0].0, "c2");
        // Hand tally: c0 Media, c1 NonMeta, c3 Journalist, c4 NonMeta.
        assert_eq!(m.dataset.label_count(Label::Meta), 2);
        assert_eq!(m.dataset.label_count(Label::NonMeta), 2);
        assert_eq!(m.dataset.label_count(Label::Media), 1);
        assert_eq!(m.dataset.label_count(Label::Journalist), 1);
        let s = merge_annotations(&ds, &coded, MergePolicy::Strict).unwrap();
        assert_eq!(s.merged, 1);
        assert_eq!(s.flagged.len(), 4);
        assert!(matches!(
            merge_annotations(&ds, &[("zz".into(), non)], MergePolicy::Majority),
            Err(SamplingError::UnknownId(_))
        ));
    }
}
