//! Text persistence: a header line `V D` followed by one `token x1 .. xD`
//! line per row. Reals are written in shortest round-trip form, so saving is
//! lossless and byte-stable.

use std::collections::{BTreeSet, HashMap};
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DocEmbeddingModel, EmbeddingError, InferenceParams, Vocab, WordEmbeddingModel, WordEmbeddingParams};

const FORMAT_VERSION: u32 = 1;

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_vectors<'a, I>(path: &Path, dim: usize, rows: I) -> Result<(), EmbeddingError>
where
    I: ExactSizeIterator<Item = (&'a str, &'a [f64])>,
{
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {}", rows.len(), dim)?;
    for (key, row) in rows {
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(EmbeddingError::Format {
                path: path.display().to_string(),
                line: 0,
                message: format!("key `{key}` is empty or contains whitespace"),
            });
        }
        write!(w, "{key}")?;
        for x in row {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a vector file into (keys, flat row-major matrix, dim).
pub fn read_vectors(path: &Path) -> Result<(Vec<String>, Vec<f64>, usize), EmbeddingError> {
    let err = |line: usize, message: String| EmbeddingError::Format {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines.next().ok_or_else(|| err(1, "missing header".into()))??;
    let mut parts = header.split_whitespace();
    let (n, dim) = match (
        parts.next().and_then(|p| p.parse::<usize>().ok()),
        parts.next().and_then(|p| p.parse::<usize>().ok()),
    ) {
        (Some(n), Some(d)) if d > 0 => (n, d),
        _ => return Err(err(1, format!("expected `V D`, got `{header}`"))),
    };
    let mut keys = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let key = fields.next().unwrap_or_default().to_string();
        let before = data.len();
        for f in fields.filter(|f| !f.is_empty()) {
            let x: f64 = f
                .parse()
                .map_err(|_| err(line_no, format!("invalid number `{f}`")))?;
            if !x.is_finite() {
                return Err(err(line_no, "non-finite value".into()));
            }
            data.push(x);
        }
        if data.len() - before != dim {
            return Err(err(line_no, format!("expected {dim} values, got {}", data.len() - before)));
        }
        keys.push(key);
    }
    if keys.len() != n {
        return Err(err(1, format!("header announces {n} rows, found {}", keys.len())));
    }
    Ok((keys, data, dim))
}

#[derive(Serialize, Deserialize)]
struct WordMeta {
    format_version: u32,
    params: WordEmbeddingParams,
    counts: Vec<u64>,
    loss_history: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DocMeta {
    format_version: u32,
    inference: InferenceParams,
    empty_docs: BTreeSet<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), EmbeddingError> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, EmbeddingError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| EmbeddingError::Format {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

impl WordEmbeddingModel {
    /// Writes `path` (input vectors), `path.out` (output vectors) and `path.meta.json`.
    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let rows = (0..self.vocab.len()).map(|i| (self.vocab.token(i), self.row(i)));
        write_vectors(path, self.dim, rows)?;
        if let Some(out) = &self.output {
            let rows = (0..self.vocab.len()).map(|i| (self.vocab.token(i), &out[i * self.dim..(i + 1) * self.dim]));
            write_vectors(&sidecar(path, ".out"), self.dim, rows)?;
        }
        let meta = WordMeta {
            format_version: FORMAT_VERSION,
            params: self.params.clone(),
            counts: self.vocab.counts.clone(),
            loss_history: self.loss_history.clone(),
        };
        write_json(&sidecar(path, ".meta.json"), &meta)
    }

    /// Loads a model; the `.out` and `.meta.json` companions are optional,
    /// so bare vector files from other tools load too.
    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let (tokens, vectors, dim) = read_vectors(path)?;
        let meta_path = sidecar(path, ".meta.json");
        let meta: Option<WordMeta> = if meta_path.exists() {
            Some(read_json(&meta_path)?)
        } else {
            None
        };
        let counts = match &meta {
            Some(m) if m.counts.len() == tokens.len() => m.counts.clone(),
            _ => vec![1; tokens.len()],
        };
        let out_path = sidecar(path, ".out");
        let output = if out_path.exists() {
            let (out_tokens, out, out_dim) = read_vectors(&out_path)?;
            if out_dim != dim || out_tokens != tokens {
                return Err(EmbeddingError::Format {
                    path: out_path.display().to_string(),
                    line: 1,
                    message: "output vectors do not match the input vocabulary".into(),
                });
            }
            Some(out)
        } else {
            None
        };
        let (params, loss_history) = match meta {
            Some(m) => (m.params, m.loss_history),
            None => (
                WordEmbeddingParams {
                    dim,
                    ..WordEmbeddingParams::default()
                },
                Vec::new(),
            ),
        };
        Ok(WordEmbeddingModel {
            vocab: Vocab::from_pairs(tokens.into_iter().zip(counts)),
            dim,
            vectors,
            output,
            params,
            loss_history,
        })
    }
}

impl DocEmbeddingModel {
    /// Writes `words.txt` (+ companions), `docs.txt` and `docs.meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), EmbeddingError> {
        fs::create_dir_all(dir)?;
        self.word_model.save(&dir.join("words.txt"))?;
        let dim = self.dim();
        let rows = self
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), &self.doc_vectors[i * dim..(i + 1) * dim]));
        write_vectors(&dir.join("docs.txt"), dim, rows)?;
        let meta = DocMeta {
            format_version: FORMAT_VERSION,
            inference: self.inference.clone(),
            empty_docs: self.empty_docs.clone(),
        };
        write_json(&dir.join("docs.meta.json"), &meta)
    }

    pub fn load(dir: &Path) -> Result<Self, EmbeddingError> {
        let word_model = WordEmbeddingModel::load(&dir.join("words.txt"))?;
        let (doc_ids, doc_vectors, dim) = read_vectors(&dir.join("docs.txt"))?;
        if dim != word_model.dim && !doc_ids.is_empty() {
            return Err(EmbeddingError::DimensionMismatch {
                left: word_model.dim,
                right: dim,
            });
        }
        let meta: DocMeta = read_json(&dir.join("docs.meta.json"))?;
        let mut doc_index = HashMap::new();
        for (i, id) in doc_ids.iter().enumerate() {
            if doc_index.insert(id.clone(), i).is_some() {
                return Err(EmbeddingError::DuplicateDocument(id.clone()));
            }
        }
        Ok(DocEmbeddingModel {
            word_model,
            doc_ids,
            doc_index,
            doc_vectors,
            empty_docs: meta.empty_docs,
            inference: meta.inference,
        })
    }
}
