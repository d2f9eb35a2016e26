//! Pre-trained word embeddings: GloVe text, word2vec text and word2vec binary.
//!
//! Vectors are widened to `f64` on load. A keyed pseudo-random generator
//! ([`synthetic_model`]) stands in for trained models in tests.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFormat {
    GloveText,
    Word2VecText,
    Word2VecBinary,
}

impl FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "glove" | "glove-text" => Ok(EmbeddingFormat::GloveText),
            "w2v-text" | "word2vec-text" => Ok(EmbeddingFormat::Word2VecText),
            "w2v-bin" | "w2v-binary" | "word2vec-binary" | "bin" => {
                Ok(EmbeddingFormat::Word2VecBinary)
            }
            _ => Err(Error::Config(format!(
                "unknown embedding format '{s}'; valid formats: glove, w2v-text, w2v-bin"
            ))),
        }
    }
}

impl EmbeddingFormat {
    /// Guesses the format from the extension; `.txt` files are sniffed for a
    /// word2vec `<count> <dim>` header.
    pub fn detect(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "bin" => Ok(EmbeddingFormat::Word2VecBinary),
            "vec" | "w2v" => Ok(EmbeddingFormat::Word2VecText),
            _ => {
                let file = File::open(path).map_err(|e| Error::io(path, e))?;
                let mut first = Vec::new();
                BufReader::new(file)
                    .read_until(b'\n', &mut first)
                    .map_err(|e| Error::io(path, e))?;
                let first = String::from_utf8_lossy(&first);
                let fields: Vec<&str> = first.split_ascii_whitespace().collect();
                if fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                    Ok(EmbeddingFormat::Word2VecText)
                } else {
                    Ok(EmbeddingFormat::GloveText)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupConfig {
    /// Retry a missed token in lowercase.
    #[serde(default)]
    pub case_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    warnings: usize,
    name: String,
}

impl EmbeddingModel {
    pub fn new(dim: usize) -> Self {
        EmbeddingModel {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            warnings: 0,
            name: String::new(),
        }
    }

    /// Adds a word; returns false (and counts a warning) for duplicates.
    pub fn push(&mut self, word: &str, vector: &[f64]) -> bool {
        assert_eq!(vector.len(), self.dim, "vector length must equal the model dimension");
        if self.index.contains_key(word) {
            self.warnings += 1;
            return false;
        }
        self.index.insert(word.to_owned(), self.words.len());
        self.words.push(word.to_owned());
        self.vectors.extend_from_slice(vector);
        true
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Lines skipped or duplicates dropped while loading.
    pub fn warnings(&self) -> usize {
        self.warnings
    }

    /// Identifier recorded in run manifests (file path or synthetic spec).
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn lookup(&self, token: &str, config: &LookupConfig) -> Option<&[f64]> {
        self.get(token).or_else(|| {
            if config.case_fallback {
                let lower = token.to_lowercase();
                if lower != token {
                    return self.get(&lower);
                }
            }
            None
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), self.row(i)))
    }
}

pub fn load(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let model = match format {
        EmbeddingFormat::GloveText => load_glove_text(path)?,
        EmbeddingFormat::Word2VecText => load_word2vec_text(path)?,
        EmbeddingFormat::Word2VecBinary => load_word2vec_binary(path)?,
    };
    Ok(model.with_name(path.display().to_string()))
}

pub fn load_auto(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    load(path, EmbeddingFormat::detect(path)?)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Parses `word v1 .. vd`; `None` on wrong arity, unparsable or non-finite values.
fn parse_row(line: &str, dim: usize) -> Option<(&str, Vec<f64>)> {
    let mut fields = line.split_ascii_whitespace();
    let word = fields.next()?;
    let values: Vec<f64> = fields
        .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()?;
    (values.len() == dim).then_some((word, values))
}

fn lines(path: &Path) -> Result<impl Iterator<Item = Result<String>> + '_> {
    let mut reader = open(path)?;
    Ok(std::iter::from_fn(move || {
        let mut buf = Vec::new();
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => None,
            Ok(_) => Some(Ok(String::from_utf8_lossy(&buf).into_owned())),
            Err(e) => Some(Err(Error::io(path, e))),
        }
    }))
}

/// GloVe text: `word v1 .. vd` per line, no header. The dimension comes from
/// the first line; later lines with a different arity are skipped and counted.
pub fn load_glove_text(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let mut model: Option<EmbeddingModel> = None;
    for (i, line) in lines(path)?.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match model.as_mut() {
            None => {
                let dim = line.split_ascii_whitespace().count().saturating_sub(1);
                let (word, values) = parse_row(&line, dim)
                    .filter(|_| dim > 0)
                    .ok_or_else(|| Error::format(path, format!("line {}: not a GloVe row", i + 1)))?;
                let mut m = EmbeddingModel::new(dim);
                m.push(word, &values);
                model = Some(m);
            }
            Some(m) => match parse_row(&line, m.dim) {
                Some((word, values)) => {
                    m.push(word, &values);
                }
                None => {
                    log::warn!("{}: skipping malformed line {}", path.display(), i + 1);
                    m.warnings += 1;
                }
            },
        }
    }
    model.ok_or_else(|| Error::format(path, "empty file"))
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_ascii_whitespace();
    let count = it.next()?.parse().ok()?;
    let dim = it.next()?.parse().ok()?;
    it.next().is_none().then_some((count, dim))
}

/// word2vec text: a `<count> <dim>` header, then `count` rows.
pub fn load_word2vec_text(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let mut it = lines(path)?.enumerate();
    let (count, dim) = match it.next() {
        Some((_, line)) => parse_header(&line?)
            .ok_or_else(|| Error::format(path, "first line is not a '<count> <dim>' header"))?,
        None => return Err(Error::format(path, "empty file")),
    };
    let mut model = EmbeddingModel::new(dim);
    let mut rows = 0usize;
    for (i, line) in it {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, values) = parse_row(&line, dim).ok_or_else(|| {
            Error::format(path, format!("line {}: expected a word and {dim} values", i + 1))
        })?;
        model.push(word, &values);
        rows += 1;
    }
    if rows != count {
        return Err(Error::format(
            path,
            format!("header declares {count} vectors, found {rows}"),
        ));
    }
    Ok(model)
}

struct OffsetReader<R> {
    inner: R,
    offset: u64,
}

impl<R: BufRead> OffsetReader<R> {
    fn read_until(&mut self, delim: u8, buf: &mut Vec<u8>) -> std::io::Result<usize> {
        let n = self.inner.read_until(delim, buf)?;
        self.offset += n as u64;
        Ok(n)
    }

    fn peek(&mut self) -> std::io::Result<Option<u8>> {
        Ok(self.inner.fill_buf()?.first().copied())
    }

    fn consume(&mut self, n: usize) {
        self.inner.consume(n);
        self.offset += n as u64;
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let mut read = 0;
        while read < buf.len() {
            match self.inner.read(&mut buf[read..])? {
                0 => break,
                n => read += n,
            }
        }
        self.offset += read as u64;
        Ok(read)
    }
}

/// word2vec binary: ASCII `<count> <dim>\n`, then per entry the word bytes,
/// one space, `dim` little-endian `f32`s and an optional newline.
pub fn load_word2vec_binary(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let mut reader = OffsetReader {
        inner: open(path)?,
        offset: 0,
    };
    let io = |e| Error::io(path, e);

    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header).map_err(io)?;
    let (count, dim) = parse_header(&String::from_utf8_lossy(&header))
        .ok_or_else(|| Error::format(path, "missing '<count> <dim>' header"))?;

    let mut model = EmbeddingModel::new(dim);
    let mut raw = vec![0u8; dim * 4];
    let mut values = vec![0f64; dim];
    for entry in 0..count {
        while reader.peek().map_err(io)? == Some(b'\n') {
            reader.consume(1);
        }
        let start = reader.offset;
        let mut word = Vec::new();
        reader.read_until(b' ', &mut word).map_err(io)?;
        if word.pop() != Some(b' ') {
            return Err(Error::format(
                path,
                format!("unexpected end of file in word of entry {entry} at byte {start}"),
            ));
        }
        let vec_start = reader.offset;
        if reader.read_exact(&mut raw).map_err(io)? != raw.len() {
            return Err(Error::format(
                path,
                format!(
                    "unexpected end of file in vector of entry {entry} at byte {} (started at {vec_start})",
                    reader.offset
                ),
            ));
        }
        for (v, chunk) in values.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as f64;
        }
        let word = String::from_utf8_lossy(&word);
        if values.iter().all(|v| v.is_finite()) {
            model.push(&word, &values);
        } else {
            log::warn!("{}: skipping non-finite vector at byte {vec_start}", path.display());
            model.warnings += 1;
        }
    }
    Ok(model)
}

fn write_row<W: Write>(out: &mut W, word: &str, vector: &[f64]) -> std::io::Result<()> {
    write!(out, "{word}")?;
    for v in vector {
        write!(out, " {v}")?;
    }
    writeln!(out)
}

pub fn write_glove_text<W: Write>(model: &EmbeddingModel, out: &mut W) -> std::io::Result<()> {
    for (word, vector) in model.iter() {
        write_row(out, word, vector)?;
    }
    Ok(())
}

pub fn write_word2vec_text<W: Write>(model: &EmbeddingModel, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{} {}", model.len(), model.dim())?;
    write_glove_text(model, out)
}

/// Narrows every value to `f32`.
pub fn write_word2vec_binary<W: Write>(model: &EmbeddingModel, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{} {}", model.len(), model.dim())?;
    for (word, vector) in model.iter() {
        out.write_all(word.as_bytes())?;
        out.write_all(b" ")?;
        for &v in vector {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Pseudo-random vector for `word`, uniform in `(-0.5/dim, 0.5/dim)`.
///
/// The stream is seeded from SHA-256 of `(seed, word)`, so a word's vector
/// does not depend on which other words are in the vocabulary.
pub fn synthetic_vector(word: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(word.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    let half = 0.5 / dim as f64;
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

pub fn synthetic_model<S: AsRef<str>>(vocab: &[S], dim: usize, seed: u64) -> EmbeddingModel {
    assert!(dim >= 1, "embedding dimension must be >= 1");
    let mut model = EmbeddingModel::new(dim);
    for word in vocab {
        let word = word.as_ref();
        if model.get(word).is_none() {
            model.push(word, &synthetic_vector(word, dim, seed));
        }
    }
    model.with_name(format!("synthetic:{dim}:{seed}"))
}
