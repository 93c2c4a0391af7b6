//! Comment data model, JSON-lines datasets and corpus statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: invalid field `{field}`: {reason}")]
    InvalidField {
        line: usize,
        field: &'static str,
        reason: String,
    },
    #[error("line {line}: duplicate comment id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("empty dataset")]
    Empty,
    #[error("invalid label set: {0}")]
    InvalidLabels(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
}

/// The five labels of the coding scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Media,
    Journalist,
    Moderator,
    Meta,
    NonMeta,
}

impl Label {
    /// Fixed class order; also the tie-breaking order for semantic features.
    pub const ALL: [Label; 5] = [
        Label::Media,
        Label::Journalist,
        Label::Moderator,
        Label::Meta,
        Label::NonMeta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Meta => "Meta",
            Label::Media => "Media",
            Label::Journalist => "Journalist",
            Label::Moderator => "Moderator",
            Label::NonMeta => "NonMeta",
        }
    }

    /// Lowercase name used inside feature names (`semantic_dist_non-meta`).
    pub fn slug(self) -> &'static str {
        match self {
            Label::Meta => "meta",
            Label::Media => "media",
            Label::Journalist => "journalist",
            Label::Moderator => "moderator",
            Label::NonMeta => "non-meta",
        }
    }

    fn bit(self) -> u8 {
        match self {
            Label::Meta => 1,
            Label::Media => 2,
            Label::Journalist => 4,
            Label::Moderator => 8,
            Label::NonMeta => 16,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| CorpusError::UnknownLabel(s.to_string()))
    }
}

/// A meta-addressee class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Addressee {
    Media,
    Journalist,
    Moderator,
}

impl Addressee {
    pub const ALL: [Addressee; 3] = [Addressee::Media, Addressee::Journalist, Addressee::Moderator];

    pub fn label(self) -> Label {
        match self {
            Addressee::Media => Label::Media,
            Addressee::Journalist => Label::Journalist,
            Addressee::Moderator => Label::Moderator,
        }
    }

    pub fn slug(self) -> &'static str {
        self.label().slug()
    }
}

impl fmt::Display for Addressee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label().as_str())
    }
}

impl FromStr for Addressee {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Addressee::ALL
            .into_iter()
            .find(|a| a.slug() == lower)
            .ok_or_else(|| CorpusError::UnknownLabel(s.to_string()))
    }
}

/// A validated subset of the five labels.
///
/// `NonMeta` excludes everything else, and any addressee implies `Meta`.
/// `Meta` without an addressee is allowed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(u8);

impl LabelSet {
    pub fn empty() -> Self {
        LabelSet(0)
    }

    pub fn non_meta() -> Self {
        LabelSet(Label::NonMeta.bit())
    }

    /// `Meta` plus the given addressees.
    pub fn meta(addressees: &[Addressee]) -> Self {
        let mut bits = Label::Meta.bit();
        for a in addressees {
            bits |= a.label().bit();
        }
        LabelSet(bits)
    }

    pub fn from_labels<I: IntoIterator<Item = Label>>(labels: I) -> Result<Self, CorpusError> {
        let bits = labels.into_iter().fold(0u8, |acc, l| acc | l.bit());
        let set = LabelSet(bits);
        set.validate()?;
        Ok(set)
    }

    fn validate(self) -> Result<(), CorpusError> {
        if self.contains(Label::NonMeta) && self.0 != Label::NonMeta.bit() {
            return Err(CorpusError::InvalidLabels(
                "NonMeta cannot be combined with other labels".into(),
            ));
        }
        let has_addressee = Addressee::ALL.iter().any(|a| self.contains(a.label()));
        if has_addressee && !self.contains(Label::Meta) {
            return Err(CorpusError::InvalidLabels(
                "addressee labels require Meta".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(self, label: Label) -> bool {
        self.0 & label.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_meta(self) -> bool {
        self.contains(Label::Meta)
    }

    pub fn is_non_meta(self) -> bool {
        self.contains(Label::NonMeta)
    }

    pub fn labels(self) -> impl Iterator<Item = Label> {
        Label::ALL.into_iter().filter(move |l| self.contains(*l))
    }

    pub fn addressees(self) -> impl Iterator<Item = Addressee> {
        Addressee::ALL
            .into_iter()
            .filter(move |a| self.contains(a.label()))
    }

    pub fn to_strings(self) -> Vec<String> {
        self.labels().map(|l| l.as_str().to_string()).collect()
    }

    /// Parses a `;`-separated label list such as `Meta;Media`.
    pub fn parse_list(s: &str) -> Result<Self, CorpusError> {
        let labels = s
            .split(';')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Label::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        LabelSet::from_labels(labels)
    }

    pub fn to_list(self) -> String {
        self.to_strings().join(";")
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_strings().join(", "))
    }
}

/// One user comment.
#[derive(Debug, Clone, PartialEq)]
pub struct Comment {
    pub id: String,
    pub title: String,
    pub text: String,
    /// Minute precision.
    pub timestamp: NaiveDateTime,
    pub username: Option<String>,
    pub department: Option<String>,
    /// 1-based position within the forum.
    pub position: Option<u32>,
    pub has_quote: Option<bool>,
    pub forum_id: Option<String>,
}

impl Comment {
    /// Comment with only the mandatory fields set.
    pub fn new(id: impl Into<String>, title: impl Into<String>, text: impl Into<String>, timestamp: NaiveDateTime) -> Self {
        Comment {
            id: id.into(),
            title: title.into(),
            text: text.into(),
            timestamp: truncate_to_minute(timestamp),
            username: None,
            department: None,
            position: None,
            has_quote: None,
            forum_id: None,
        }
    }
}

fn truncate_to_minute(ts: NaiveDateTime) -> NaiveDateTime {
    ts.with_second(0)
        .and_then(|t| t.with_nanosecond(0))
        .unwrap_or(ts)
}

/// Parses an ISO-8601 timestamp and truncates it to the minute.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 6] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(truncate_to_minute(dt.naive_local()));
    }
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(truncate_to_minute)
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// A comment together with its (possibly empty) label set.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub comment: Comment,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub entries: Vec<Entry>,
    pub source_tag: String,
}

/// On-disk record of the `comments-jsonl` format.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    title: String,
    text: String,
    timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    username: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    department: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    has_quote: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forum_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// Supported dataset file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    CommentsJsonl,
}

impl LabeledDataset {
    pub fn new(source_tag: impl Into<String>) -> Self {
        LabeledDataset {
            entries: Vec::new(),
            source_tag: source_tag.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn comments(&self) -> impl Iterator<Item = &Comment> {
        self.entries.iter().map(|e| &e.comment)
    }

    pub fn get(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.comment.id == id)
    }

    /// Adds an entry, enforcing the dataset invariants.
    pub fn push(&mut self, comment: Comment, labels: LabelSet) -> Result<(), CorpusError> {
        if comment.text.trim().is_empty() {
            return Err(CorpusError::InvalidField {
                line: self.entries.len() + 1,
                field: "text",
                reason: "must be non-empty".into(),
            });
        }
        if self.entries.iter().any(|e| e.comment.id == comment.id) {
            return Err(CorpusError::DuplicateId {
                line: self.entries.len() + 1,
                id: comment.id,
            });
        }
        self.entries.push(Entry { comment, labels });
        Ok(())
    }

    /// Loads a dataset; the file stem becomes the source tag.
    pub fn load(path: &Path, format: DatasetFormat) -> Result<Self, CorpusError> {
        match format {
            DatasetFormat::CommentsJsonl => {
                let tag = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let file = File::open(path)?;
                Self::read_jsonl(BufReader::new(file), tag)
            }
        }
    }

    pub fn read_jsonl<R: BufRead>(reader: R, source_tag: String) -> Result<Self, CorpusError> {
        let mut ds = LabeledDataset::new(source_tag);
        let mut seen = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            let entry = record_to_entry(record, line_no)?;
            if !seen.insert(entry.comment.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    line: line_no,
                    id: entry.comment.id,
                });
            }
            ds.entries.push(entry);
        }
        if ds.entries.is_empty() {
            return Err(CorpusError::Empty);
        }
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, w: &mut W) -> Result<(), CorpusError> {
        for e in &self.entries {
            let c = &e.comment;
            let record = Record {
                id: c.id.clone(),
                title: c.title.clone(),
                text: c.text.clone(),
                timestamp: format_timestamp(&c.timestamp),
                username: c.username.clone(),
                department: c.department.clone(),
                position: c.position.map(i64::from),
                has_quote: c.has_quote,
                forum_id: c.forum_id.clone(),
                labels: (!e.labels.is_empty()).then(|| e.labels.to_strings()),
            };
            let line = serde_json::to_string(&record).map_err(std::io::Error::other)?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Subset of entries at the given indices, in index order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
            source_tag: self.source_tag.clone(),
        }
    }

    pub fn label_count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.labels.contains(label)).count()
    }
}

fn record_to_entry(r: Record, line: usize) -> Result<Entry, CorpusError> {
    let invalid = |field: &'static str, reason: String| CorpusError::InvalidField { line, field, reason };
    if r.id.trim().is_empty() {
        return Err(invalid("id", "must be non-empty".into()));
    }
    if r.text.trim().is_empty() {
        return Err(invalid("text", "must be non-empty after trimming".into()));
    }
    let timestamp = parse_timestamp(&r.timestamp)
        .ok_or_else(|| invalid("timestamp", format!("cannot parse `{}` as ISO-8601", r.timestamp)))?;
    let position = match r.position {
        None => None,
        Some(p) if p >= 1 && p <= i64::from(u32::MAX) => Some(p as u32),
        Some(p) => return Err(invalid("position", format!("must be >= 1, got {p}"))),
    };
    let labels = match r.labels {
        None => LabelSet::empty(),
        Some(names) => {
            let parsed = names
                .iter()
                .map(|n| n.parse::<Label>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| invalid("labels", e.to_string()))?;
            LabelSet::from_labels(parsed).map_err(|e| invalid("labels", e.to_string()))?
        }
    };
    Ok(Entry {
        comment: Comment {
            id: r.id,
            title: r.title,
            text: r.text,
            timestamp,
            username: r.username,
            department: r.department,
            position,
            has_quote: r.has_quote,
            forum_id: r.forum_id,
        },
        labels,
    })
}

/// Summary statistics of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub n_comments: usize,
    pub n_labeled: usize,
    pub label_counts: BTreeMap<Label, usize>,
    /// Mean whitespace-separated words per non-empty title.
    pub mean_title_words: Option<f64>,
    pub mean_text_words: Option<f64>,
    /// Share of quoting comments among those with the quote flag present.
    pub quote_share: Option<f64>,
    pub department_counts: BTreeMap<String, usize>,
}

pub fn dataset_stats(ds: &LabeledDataset) -> StatsReport {
    let mut label_counts: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    let mut department_counts = BTreeMap::new();
    let (mut title_words, mut n_titles) = (0usize, 0usize);
    let mut text_words = 0usize;
    let (mut quotes, mut n_quote_flags) = (0usize, 0usize);
    let mut n_labeled = 0;

    for e in &ds.entries {
        let c = &e.comment;
        for l in e.labels.labels() {
            *label_counts.entry(l).or_default() += 1;
        }
        if !e.labels.is_empty() {
            n_labeled += 1;
        }
        if !c.title.trim().is_empty() {
            n_titles += 1;
            title_words += c.title.split_whitespace().count();
        }
        text_words += c.text.split_whitespace().count();
        if let Some(q) = c.has_quote {
            n_quote_flags += 1;
            quotes += usize::from(q);
        }
        if let Some(d) = &c.department {
            *department_counts.entry(d.clone()).or_default() += 1;
        }
    }

    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    StatsReport {
        n_comments: ds.len(),
        n_labeled,
        label_counts,
        mean_title_words: ratio(title_words, n_titles),
        mean_text_words: ratio(text_words, ds.len()),
        quote_share: ratio(quotes, n_quote_flags),
        department_counts,
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        writeln!(f, "comments            {}", self.n_comments)?;
        writeln!(f, "labeled             {}", self.n_labeled)?;
        for (l, n) in &self.label_counts {
            writeln!(f, "  {:<17} {}", l.as_str(), n)?;
        }
        writeln!(f, "mean title words    {}", opt(self.mean_title_words))?;
        writeln!(f, "mean text words     {}", opt(self.mean_text_words))?;
        writeln!(f, "quote share         {}", opt(self.quote_share))?;
        if !self.department_counts.is_empty() {
            writeln!(f, "departments")?;
            for (d, n) in &self.department_counts {
                writeln!(f, "  {d:<17} {n}")?;
            }
        }
        Ok(())
    }
}

/// Distinct departments in first-seen order.
pub fn departments(ds: &LabeledDataset) -> Vec<String> {
    let mut seen = BTreeSet::new();
    ds.comments()
        .filter_map(|c| c.department.clone())
        .filter(|d| seen.insert(d.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    const FIXTURE: &str = r#"{"id":"a","title":"Der Artikel","text":"Schlecht recherchiert.","timestamp":"2018-03-05T09:15:42","department":"politik","position":3,"has_quote":false,"labels":["Meta","Journalist"]}
{"id":"b","title":"","text":"Ich sehe das anders.","timestamp":"2018-03-05T10:00","has_quote":true,"labels":["NonMeta"]}
{"id":"c","title":"Zensur","text":"Warum wurde mein Beitrag gelöscht?","timestamp":"2018-03-06T21:30:00+01:00","labels":["Meta","Moderator","Media"]}
"#;

    fn load(s: &str) -> Result<LabeledDataset, CorpusError> {
        LabeledDataset::read_jsonl(s.as_bytes(), "fixture".into())
    }

    #[test]
    fn loads_fixture_and_counts_labels() {
        let ds = load(FIXTURE).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.label_count(Label::Meta), 2);
        assert_eq!(ds.label_count(Label::NonMeta), 1);
        assert_eq!(ds.label_count(Label::Journalist), 1);
        assert_eq!(ds.label_count(Label::Moderator), 1);
        assert_eq!(ds.label_count(Label::Media), 1);
        assert_eq!(ds.entries[0].comment.timestamp, ts("2018-03-05T09:15"));
        assert_eq!(ds.entries[2].comment.timestamp, ts("2018-03-06T21:30"));
        assert_eq!(ds.entries[0].comment.position, Some(3));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(load(""), Err(CorpusError::Empty)));
        assert!(matches!(load("\n\n"), Err(CorpusError::Empty)));
    }

    #[test]
    fn non_meta_is_exclusive() {
        let line = r#"{"id":"x","title":"","text":"t","timestamp":"2018-01-01T00:00","labels":["NonMeta","Media"]}"#;
        match load(line) {
            Err(CorpusError::InvalidField { line: 1, field: "labels", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn addressee_requires_meta() {
        assert!(LabelSet::from_labels([Label::Media]).is_err());
        assert!(LabelSet::from_labels([Label::Meta]).is_ok());
    }

    #[test]
    fn errors_name_line_and_field() {
        let bad = format!(
            "{}\n{}",
            r#"{"id":"x","title":"","text":"t","timestamp":"2018-01-01T00:00"}"#,
            r#"{"id":"y","title":"","text":"t","timestamp":"gestern"}"#
        );
        match load(&bad) {
            Err(CorpusError::InvalidField { line: 2, field: "timestamp", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let pos = r#"{"id":"x","title":"","text":"t","timestamp":"2018-01-01T00:00","position":0}"#;
        assert!(matches!(load(pos), Err(CorpusError::InvalidField { field: "position", .. })));
        let blank = r#"{"id":"x","title":"","text":"   ","timestamp":"2018-01-01T00:00"}"#;
        assert!(matches!(load(blank), Err(CorpusError::InvalidField { field: "text", .. })));
        assert!(matches!(load("{not json"), Err(CorpusError::Malformed { line: 1, .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dup = r#"{"id":"x","title":"","text":"t","timestamp":"2018-01-01T00:00"}
{"id":"x","title":"","text":"u","timestamp":"2018-01-01T00:00"}"#;
        assert!(matches!(load(dup), Err(CorpusError::DuplicateId { line: 2, .. })));
    }

    #[test]
    fn unlabeled_records_get_empty_set() {
        let ds = load(r#"{"id":"x","title":"","text":"t","timestamp":"2018-01-01T00:00"}"#).unwrap();
        assert!(ds.entries[0].labels.is_empty());
    }

    #[test]
    fn save_load_round_trip() {
        let ds = load(FIXTURE).unwrap();
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        let again = LabeledDataset::read_jsonl(buf.as_slice(), "fixture".into()).unwrap();
        assert_eq!(ds, again);
        let mut buf2 = Vec::new();
        again.write_jsonl(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn stats_of_empty_dataset() {
        let s = dataset_stats(&LabeledDataset::new("empty"));
        assert_eq!(s.n_comments, 0);
        assert!(s.label_counts.values().all(|&n| n == 0));
        assert_eq!(s.mean_title_words, None);
        assert_eq!(s.mean_text_words, None);
        assert_eq!(s.quote_share, None);
    }

    #[test]
    fn stats_quote_share_and_means() {
        let t = ts("2018-01-01T00:00");
        let mut ds = LabeledDataset::new("q");
        for (i, q) in [true, false, true, false].into_iter().enumerate() {
            let mut c = Comment::new(format!("c{i}"), if i == 0 { "zwei Worte" } else { "" }, "eins zwei drei", t);
            c.has_quote = Some(q);
            ds.push(c, LabelSet::empty()).unwrap();
        }
        let s = dataset_stats(&ds);
        assert_eq!(s.quote_share, Some(0.5));
        assert_eq!(s.mean_title_words, Some(2.0));
        assert_eq!(s.mean_text_words, Some(3.0));
    }
}
