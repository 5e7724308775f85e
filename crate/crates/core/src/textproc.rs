//! Tokenization and normalized bag-of-words construction.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use crate::embeddings::{EmbeddingTable, LookupPolicy};
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Lowercase set of function words removed before building distributions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordSet {
    tokens: HashSet<String>,
}

impl StopwordSet {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            tokens: tokens
                .into_iter()
                .map(|t| t.as_ref().to_lowercase())
                .collect(),
        }
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    /// One token per line; blank lines and `#` comments are ignored.
    pub fn parse(contents: &str) -> Self {
        Self::new(
            contents
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&contents))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases, splits on whitespace and strips punctuation from both ends of
/// every token. Internal punctuation (`wine-glass`, `dog's`) is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| raw.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    weight: f64,
    vector: Vec<f64>,
}

/// A normalized bag of words whose tokens all carry an embedding.
///
/// Tokens iterate in lexicographic order. Weights are strictly positive and sum
/// to one unless the distribution is empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordDistribution {
    entries: BTreeMap<String, Entry>,
    dropped: usize,
}

impl WordDistribution {
    /// Accumulates nonnegative counts per token, resolves each token through
    /// `table` and normalizes. Tokens without a vector are dropped and counted.
    pub fn from_counts<I, S>(
        counts: I,
        table: &EmbeddingTable,
        policy: &LookupPolicy,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut merged: BTreeMap<String, f64> = BTreeMap::new();
        for (token, count) in counts {
            if !(count.is_finite() && count >= 0.0) {
                return Err(Error::Domain(format!(
                    "invalid count {count} for {:?}",
                    token.as_ref()
                )));
            }
            *merged.entry(token.as_ref().to_string()).or_insert(0.0) += count;
        }

        let mut dropped = 0usize;
        let mut resolved = Vec::with_capacity(merged.len());
        for (token, count) in merged {
            if count == 0.0 {
                continue;
            }
            match table.lookup(&token, policy)? {
                Some(vector) => resolved.push((token, count, vector.into_owned())),
                None => dropped += 1,
            }
        }
        let mut dist = Self::from_resolved(resolved)?;
        dist.dropped = dropped;
        Ok(dist)
    }

    /// Builds a distribution from tokens with explicit vectors, normalizing the
    /// given masses. Repeated tokens accumulate mass and keep the first vector.
    pub fn from_resolved<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64, Vec<f64>)>,
        S: Into<String>,
    {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        let mut dimension = None;
        for (token, mass, vector) in items {
            let token = token.into();
            if !(mass.is_finite() && mass >= 0.0) {
                return Err(Error::Domain(format!("invalid mass {mass} for {token:?}")));
            }
            if *dimension.get_or_insert(vector.len()) != vector.len() {
                return Err(Error::Domain(format!(
                    "vector for {token:?} has inconsistent dimension"
                )));
            }
            if mass == 0.0 {
                continue;
            }
            entries
                .entry(token)
                .and_modify(|e| e.weight += mass)
                .or_insert(Entry {
                    weight: mass,
                    vector,
                });
        }
        let total: f64 = entries.values().map(|e| e.weight).sum();
        for e in entries.values_mut() {
            e.weight /= total;
        }
        Ok(Self {
            entries,
            dropped: 0,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Tokens that were removed for lack of an embedding.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.entries.get(token).map_or(0.0, |e| e.weight)
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(|e| e.vector.as_slice())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// `(token, weight, vector)` in lexicographic token order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64, &[f64])> {
        self.entries
            .iter()
            .map(|(t, e)| (t.as_str(), e.weight, e.vector.as_slice()))
    }
}

/// Removes stopwords and unembeddable tokens, then normalizes frequencies.
///
/// An empty result is a valid (empty) distribution. Errors only when `policy`
/// asks for out-of-vocabulary tokens to be fatal.
pub fn build_nbow(
    tokens: &[String],
    stopwords: &StopwordSet,
    table: &EmbeddingTable,
    policy: &LookupPolicy,
) -> Result<WordDistribution> {
    let content = tokens
        .iter()
        .filter(|t| !stopwords.contains(t))
        .map(|t| (t.as_str(), 1.0));
    WordDistribution::from_counts(content, table, policy)
}
