//! Word-embedding tables in word2vec text and binary formats.
//!
//! Vectors are kept exactly as stored (no re-normalization); binary files are
//! read as little-endian `f32` and widened to `f64`.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A fixed vocabulary of `dimension`-component vectors.
///
/// Immutable once built; share it by reference across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    // row-major, words.len() * dimension
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Domain("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dimension,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
        })
    }

    /// Builds a table from `(token, vector)` pairs; later duplicates are ignored.
    pub fn from_entries<I, S>(dimension: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::new(dimension)?;
        for (token, vector) in entries {
            table.insert(token.into(), &vector)?;
        }
        Ok(table)
    }

    /// Appends a word. Returns `false` if the token was already present
    /// (the first occurrence wins).
    pub fn insert(&mut self, token: String, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::Domain(format!(
                "vector for {token:?} has {} components, expected {}",
                vector.len(),
                self.dimension
            )));
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "vector for {token:?} has non-finite component {bad}"
            )));
        }
        if self.index.contains_key(&token) {
            return Ok(false);
        }
        self.index.insert(token.clone(), self.words.len());
        self.words.push(token);
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Exact-match vector lookup, no fallbacks.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&row| self.row(row))
    }

    /// Words in insertion order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dimension..(row + 1) * self.dimension]
    }

    /// Resolves a token to a vector following `policy`.
    ///
    /// The chain is: exact match, lowercased match, then for labels made of
    /// several space- or hyphen-separated parts each join strategy in order.
    pub fn lookup<'a>(
        &'a self,
        token: &str,
        policy: &LookupPolicy,
    ) -> Result<Option<Cow<'a, [f64]>>> {
        if token.is_empty() {
            return Err(Error::Domain("cannot look up an empty token".into()));
        }
        if let Some(v) = self.find_cased(token, policy.lowercase) {
            return Ok(Some(Cow::Borrowed(v)));
        }

        let parts: Vec<&str> = token
            .split(|c: char| c.is_whitespace() || c == '-')
            .filter(|p| !p.is_empty())
            .collect();
        if parts.len() > 1 {
            for strategy in &policy.multiword_join {
                match strategy {
                    JoinStrategy::Underscore => {
                        if let Some(v) = self.find_cased(&parts.join("_"), policy.lowercase) {
                            return Ok(Some(Cow::Borrowed(v)));
                        }
                    }
                    JoinStrategy::Average => {
                        let found: Vec<&[f64]> = parts
                            .iter()
                            .filter_map(|p| self.find_cased(p, policy.lowercase))
                            .collect();
                        if !found.is_empty() {
                            let mut mean = vec![0.0; self.dimension];
                            for v in &found {
                                for (m, x) in mean.iter_mut().zip(v.iter()) {
                                    *m += x;
                                }
                            }
                            let n = found.len() as f64;
                            mean.iter_mut().for_each(|m| *m /= n);
                            return Ok(Some(Cow::Owned(mean)));
                        }
                    }
                }
            }
        }

        match policy.oov {
            OovBehavior::DropWithWarning => {
                log::debug!("dropping out-of-vocabulary token {token:?}");
                Ok(None)
            }
            OovBehavior::Error => Err(Error::Lookup(token.to_string())),
        }
    }

    fn find_cased(&self, token: &str, lowercase: bool) -> Option<&[f64]> {
        self.get(token).or_else(|| {
            if !lowercase {
                return None;
            }
            let lower = token.to_lowercase();
            if lower == token {
                None
            } else {
                self.get(&lower)
            }
        })
    }

    pub fn load(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<Self> {
        let path = path.as_ref();
        match format {
            EmbeddingFormat::Text => load_text_embeddings(path),
            EmbeddingFormat::Binary => load_binary_embeddings(path),
            EmbeddingFormat::Auto => match sniff_format(path)? {
                EmbeddingFormat::Binary => load_binary_embeddings(path),
                _ => load_text_embeddings(path),
            },
        }
    }

    /// Writes word2vec text format with a `<count> <dim>` header.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "{} {}", self.len(), self.dimension)?;
            for (i, word) in self.words.iter().enumerate() {
                write!(w, "{word}")?;
                for x in self.row(i) {
                    write!(w, " {x}")?;
                }
                writeln!(w)?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    /// Writes word2vec binary format; components are narrowed to `f32`.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "{} {}", self.len(), self.dimension)?;
            for (i, word) in self.words.iter().enumerate() {
                w.write_all(word.as_bytes())?;
                w.write_all(b" ")?;
                for &x in self.row(i) {
                    w.write_all(&(x as f32).to_le_bytes())?;
                }
                w.write_all(b"\n")?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
    Auto,
}

impl FromStr for EmbeddingFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "text" => Ok(Self::Text),
            "binary" => Ok(Self::Binary),
            "auto" => Ok(Self::Auto),
            other => Err(format!(
                "unknown embedding format {other:?} (expected text, binary or auto)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinStrategy {
    /// `dining-table` -> `dining_table`
    Underscore,
    /// Mean of the vectors of the parts that resolve.
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovBehavior {
    #[default]
    DropWithWarning,
    Error,
}

/// How tokens that miss an exact match are resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupPolicy {
    lowercase: bool,
    multiword_join: Vec<JoinStrategy>,
    oov: OovBehavior,
}

impl LookupPolicy {
    pub fn new(
        lowercase: bool,
        multiword_join: Vec<JoinStrategy>,
        oov: OovBehavior,
    ) -> Result<Self> {
        if multiword_join.is_empty() {
            return Err(Error::Domain(
                "lookup policy needs at least one join strategy".into(),
            ));
        }
        Ok(Self {
            lowercase,
            multiword_join,
            oov,
        })
    }

    pub fn with_oov(mut self, oov: OovBehavior) -> Self {
        self.oov = oov;
        self
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn multiword_join(&self) -> &[JoinStrategy] {
        &self.multiword_join
    }

    pub fn oov(&self) -> OovBehavior {
        self.oov
    }
}

impl Default for LookupPolicy {
    fn default() -> Self {
        Self {
            lowercase: true,
            multiword_join: vec![JoinStrategy::Underscore, JoinStrategy::Average],
            oov: OovBehavior::DropWithWarning,
        }
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Domain(format!(
            "cosine of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum();
    let nv: f64 = v.iter().map(|b| b * b).sum();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine of a zero-norm vector".into()));
    }
    // one square root keeps cosine(x, x) == 1 exactly
    Ok((dot / (nu * nv).sqrt()).clamp(-1.0, 1.0))
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let count = fields.next()?.parse().ok()?;
    let dim = fields.next()?.parse().ok()?;
    if fields.next().is_some() {
        return None;
    }
    Some((count, dim))
}

pub fn load_text_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut header: Option<(usize, usize)> = None;
    let mut table: Option<EmbeddingTable> = None;
    let mut rows = 0usize;
    let mut vector = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 1 {
            if let Some((count, dim)) = parse_header(&line) {
                if count == 0 || dim == 0 {
                    return Err(Error::format(
                        path,
                        format!("header declares count {count}, dim {dim}"),
                    ));
                }
                header = Some((count, dim));
                table = Some(EmbeddingTable::new(dim)?);
                continue;
            }
        }

        let mut fields = line.split_whitespace();
        let token = fields.next().expect("nonblank line has a field");
        vector.clear();
        for field in fields {
            let x: f64 = field
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("invalid component {field:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("non-finite component {field:?}"),
                ));
            }
            vector.push(x);
        }
        if vector.is_empty() {
            return Err(Error::parse(
                path,
                lineno,
                format!("token {token:?} has no components"),
            ));
        }
        let table =
            table.get_or_insert_with(|| EmbeddingTable::new(vector.len()).expect("nonzero dim"));
        if vector.len() != table.dimension() {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "token {token:?} has {} components, expected {}",
                    vector.len(),
                    table.dimension()
                ),
            ));
        }
        table.insert(token.to_string(), &vector)?;
        rows += 1;
    }

    if let Some((count, _)) = header {
        if count != rows {
            return Err(Error::format(
                path,
                format!("header declares {count} words but file has {rows}"),
            ));
        }
    }
    table.ok_or_else(|| Error::format(path, "no embeddings found"))
}

pub fn load_binary_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut header = Vec::new();
    reader
        .read_until(b'\n', &mut header)
        .map_err(|e| Error::io(path, e))?;
    let header = std::str::from_utf8(&header)
        .ok()
        .and_then(|h| {
            let mut f = h.split_whitespace();
            let count: i64 = f.next()?.parse().ok()?;
            let dim: i64 = f.next()?.parse().ok()?;
            Some((count, dim))
        })
        .ok_or_else(|| Error::format(path, "missing or malformed '<count> <dim>' header"))?;
    let (count, dim) = header;
    if count <= 0 || dim <= 0 {
        return Err(Error::format(
            path,
            format!("header declares count {count}, dim {dim}"),
        ));
    }
    let (count, dim) = (count as usize, dim as usize);

    let mut table = EmbeddingTable::new(dim)?;
    let mut token = Vec::new();
    let mut raw = vec![0u8; dim * 4];
    let mut vector = vec![0.0f64; dim];
    for entry in 0..count {
        token.clear();
        loop {
            let mut byte = [0u8; 1];
            match reader.read(&mut byte) {
                Ok(0) => {
                    return Err(Error::format(
                        path,
                        format!("truncated at entry {} of {count}", entry + 1),
                    ));
                }
                Ok(_) => match byte[0] {
                    b' ' => break,
                    b'\n' if token.is_empty() => continue,
                    b => token.push(b),
                },
                Err(e) => return Err(Error::io(path, e)),
            }
        }
        reader.read_exact(&mut raw).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::format(
                    path,
                    format!("truncated vector at entry {} of {count}", entry + 1),
                )
            } else {
                Error::io(path, e)
            }
        })?;
        for (x, chunk) in vector.iter_mut().zip(raw.chunks_exact(4)) {
            *x = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
        }
        let word = String::from_utf8_lossy(&token).into_owned();
        table
            .insert(word, &vector)
            .map_err(|e| Error::format(path, format!("entry {}: {e}", entry + 1)))?;
    }
    Ok(table)
}

/// Binary iff the first line is a `<count> <dim>` header and the bytes after
/// it are not valid UTF-8.
pub fn sniff_format(path: impl AsRef<Path>) -> Result<EmbeddingFormat> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = Vec::new();
    reader
        .read_until(b'\n', &mut first)
        .map_err(|e| Error::io(path, e))?;
    let has_header = std::str::from_utf8(&first)
        .ok()
        .and_then(parse_header)
        .is_some();
    if !has_header {
        return Ok(EmbeddingFormat::Text);
    }
    let mut sample = Vec::with_capacity(4096);
    reader
        .take(4096)
        .read_to_end(&mut sample)
        .map_err(|e| Error::io(path, e))?;
    Ok(match std::str::from_utf8(&sample) {
        Ok(_) => EmbeddingFormat::Text,
        // a multi-byte character cut off by the sample boundary is still text
        Err(e) if e.error_len().is_none() => EmbeddingFormat::Text,
        Err(_) => EmbeddingFormat::Binary,
    })
}

pub fn load_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path, format)
}
