//! Phrase vectorization.
//!
//! The built-in embedder derives deterministic word vectors from positive
//! pointwise mutual information over a sliding co-occurrence window,
//! truncated to the most frequent context words; a phrase vector is the
//! mean of its word vectors. Pretrained vectors (word2vec text format)
//! can be swapped in through [`FileBackedVectors`] when reproducibility
//! against an external model matters more than self-containedness.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::phrases::PhraseCandidate;

/// A source of per-word vectors of one shared dimension.
pub trait WordVectors {
    fn dim(&self) -> usize;
    fn vector(&self, word: &str) -> Option<&[f64]>;
}

/// PPMI co-occurrence embedder fitted on tokenized review texts.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmiEmbedder {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl PpmiEmbedder {
    /// Fits word vectors on token lists (one list per review). `dim`
    /// context columns are kept, chosen by corpus frequency (ties broken
    /// lexicographically); the effective dimension shrinks when the
    /// vocabulary is smaller.
    pub fn fit(token_lists: &[Vec<String>], dim: usize, window: usize) -> Self {
        let mut word_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for tokens in token_lists {
            for token in tokens {
                *word_counts.entry(token).or_insert(0) += 1;
            }
        }
        let mut by_freq: Vec<(&str, usize)> =
            word_counts.iter().map(|(w, c)| (*w, *c)).collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let context_words: Vec<&str> = by_freq.iter().take(dim).map(|(w, _)| *w).collect();
        let context_index: BTreeMap<&str, usize> = context_words
            .iter()
            .enumerate()
            .map(|(i, w)| (*w, i))
            .collect();
        let effective_dim = context_words.len();

        // Symmetric co-occurrence counts within the window.
        let mut cooc: BTreeMap<(&str, usize), f64> = BTreeMap::new();
        let mut row_totals: BTreeMap<&str, f64> = BTreeMap::new();
        let mut col_totals: Vec<f64> = vec![0.0; effective_dim];
        let mut grand_total = 0.0;
        for tokens in token_lists {
            for (i, word) in tokens.iter().enumerate() {
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(tokens.len().saturating_sub(1));
                for (j, context) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let Some(&col) = context_index.get(context.as_str()) else {
                        continue;
                    };
                    *cooc.entry((word.as_str(), col)).or_insert(0.0) += 1.0;
                    *row_totals.entry(word.as_str()).or_insert(0.0) += 1.0;
                    col_totals[col] += 1.0;
                    grand_total += 1.0;
                }
            }
        }

        let mut vectors = BTreeMap::new();
        for word in word_counts.keys() {
            let mut vec = vec![0.0; effective_dim];
            if let Some(row_total) = row_totals.get(word) {
                for ((_, col), joint) in cooc.range((*word, 0)..=(*word, usize::MAX)) {
                    if col_totals[*col] > 0.0 {
                        let pmi =
                            (joint * grand_total / (row_total * col_totals[*col])).ln();
                        vec[*col] = pmi.max(0.0);
                    }
                }
            }
            vectors.insert((*word).to_string(), vec);
        }
        PpmiEmbedder {
            dim: effective_dim,
            vectors,
        }
    }
}

impl WordVectors for PpmiEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

/// Pretrained vectors in word2vec text format: one `word v1 v2 ... vd`
/// line per word.
#[derive(Debug, Clone, PartialEq)]
pub struct FileBackedVectors {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl FileBackedVectors {
    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let text = fs::read_to_string(path)
            .map_err(|e| EmbedError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, EmbedError> {
        let mut vectors = BTreeMap::new();
        let mut dim = None;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line").to_string();
            let values: Result<Vec<f64>, _> = fields.map(str::parse).collect();
            let values = values.map_err(|_| EmbedError::MalformedLine { line: idx + 1 })?;
            if values.is_empty() {
                return Err(EmbedError::MalformedLine { line: idx + 1 });
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(EmbedError::DimensionMismatch {
                        word,
                        expected: d,
                        got: values.len(),
                    });
                }
                Some(_) => {}
            }
            vectors.insert(word, values);
        }
        Ok(FileBackedVectors {
            dim: dim.unwrap_or(0),
            vectors,
        })
    }
}

impl WordVectors for FileBackedVectors {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

/// A phrase candidate paired with its embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseVector {
    pub phrase: PhraseCandidate,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedWarning {
    /// A phrase word had no vector; it contributed zeros to the mean.
    MissingWord { word: String },
}

impl fmt::Display for EmbedWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedWarning::MissingWord { word } => {
                write!(f, "no vector for {word:?}; using zeros")
            }
        }
    }
}

/// Embeds each candidate as the mean of its two word vectors. Words the
/// provider does not know contribute a zero vector and a warning.
pub fn embed_phrases(
    candidates: &[PhraseCandidate],
    provider: &impl WordVectors,
) -> (Vec<PhraseVector>, Vec<EmbedWarning>) {
    let dim = provider.dim();
    let mut warnings = Vec::new();
    let vectors = candidates
        .iter()
        .map(|candidate| {
            let mut mean = vec![0.0; dim];
            for word in &candidate.tokens {
                match provider.vector(word) {
                    Some(v) => {
                        for (m, x) in mean.iter_mut().zip(v) {
                            *m += x / 2.0;
                        }
                    }
                    None => warnings.push(EmbedWarning::MissingWord { word: word.clone() }),
                }
            }
            PhraseVector {
                phrase: candidate.clone(),
                vector: mean,
            }
        })
        .collect();
    (vectors, warnings)
}

#[derive(Debug)]
pub enum EmbedError {
    Io(String, std::io::Error),
    MalformedLine { line: usize },
    DimensionMismatch { word: String, expected: usize, got: usize },
}

impl fmt::Display for EmbedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedError::Io(path, err) => write!(f, "cannot read vectors {path}: {err}"),
            EmbedError::MalformedLine { line } => write!(f, "malformed vector line {line}"),
            EmbedError::DimensionMismatch { word, expected, got } => write!(
                f,
                "vector for {word:?} has dimension {got}, expected {expected}"
            ),
        }
    }
}

impl std::error::Error for EmbedError {}
