//! Review mining: ad-complaint filtering, phrase/topic discovery, and
//! keyword classification of reviews into the four ad cost types.

pub mod embed;
pub mod kmeans;
pub mod phrases;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use embed::{
    embed_phrases, EmbedError, EmbedWarning, FileBackedVectors, PhraseVector, PpmiEmbedder,
    WordVectors,
};
pub use kmeans::{cluster_phrases, kmeans, ClusterError, KMeansResult, DEFAULT_K};
pub use phrases::{
    default_stopwords, extract_phrase_candidates, load_stopwords, normalize, tokenize_filtered,
    PhraseCandidate,
};

/// One user review. Ratings are whole stars from 1 to 5.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub app_id: String,
    pub rating: u8,
    /// ISO date, YYYY-MM-DD.
    pub date: String,
    pub text: String,
}

impl ReviewRecord {
    pub fn validate(&self) -> Result<(), ReviewError> {
        if !(1..=5).contains(&self.rating) {
            return Err(ReviewError::InvalidRecord(format!(
                "rating {} out of 1..=5",
                self.rating
            )));
        }
        let date_ok = self.date.len() == 10
            && self.date.bytes().enumerate().all(|(i, b)| match i {
                4 | 7 => b == b'-',
                _ => b.is_ascii_digit(),
            });
        if !date_ok {
            return Err(ReviewError::InvalidRecord(format!(
                "date {:?} is not YYYY-MM-DD",
                self.date
            )));
        }
        Ok(())
    }
}

/// Reads reviews from JSON-lines text, one object per line.
pub fn parse_reviews_jsonl(text: &str) -> Result<Vec<ReviewRecord>, ReviewError> {
    let mut reviews = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ReviewRecord = serde_json::from_str(line)
            .map_err(|e| ReviewError::MalformedReview { line: idx + 1, source: e })?;
        record.validate().map_err(|e| match e {
            ReviewError::InvalidRecord(msg) => ReviewError::InvalidRecord(format!(
                "line {}: {msg}",
                idx + 1
            )),
            other => other,
        })?;
        reviews.push(record);
    }
    Ok(reviews)
}

pub fn load_reviews_jsonl(path: &Path) -> Result<Vec<ReviewRecord>, ReviewError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ReviewError::Io(path.display().to_string(), e))?;
    parse_reviews_jsonl(&text)
}

fn ad_review_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // The word "ad"/"ads" or any advert-prefixed word, on word
    // boundaries so "made" never matches.
    RE.get_or_init(|| Regex::new(r"\b(ads?|advert[a-z]*)\b").unwrap())
}

/// Keeps reviews that explicitly talk about ads. Order-preserving and
/// idempotent.
pub fn filter_ad_reviews(reviews: &[ReviewRecord]) -> Vec<ReviewRecord> {
    reviews
        .iter()
        .filter(|r| ad_review_re().is_match(&r.text.to_lowercase()))
        .cloned()
        .collect()
}

/// The four user-concerned ad cost types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostType {
    NumAds,
    MemCpu,
    Traffic,
    Battery,
}

impl CostType {
    pub const ALL: [CostType; 4] = [
        CostType::NumAds,
        CostType::MemCpu,
        CostType::Traffic,
        CostType::Battery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostType::NumAds => "num_ads",
            CostType::MemCpu => "mem_cpu",
            CostType::Traffic => "traffic",
            CostType::Battery => "battery",
        }
    }
}

impl fmt::Display for CostType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Keywords and key phrases that signal each cost type. Entries are
/// normalized to lowercase on load; every cost type needs at least one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeywordTable {
    pub entries: BTreeMap<CostType, Vec<String>>,
}

const BUILTIN_KEYWORDS: &str = include_str!("../../data/keywords.json");

impl KeywordTable {
    /// The keyword table bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_KEYWORDS).expect("bundled keyword table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ReviewError> {
        let mut table: KeywordTable =
            serde_json::from_str(text).map_err(ReviewError::MalformedTable)?;
        for keywords in table.entries.values_mut() {
            for kw in keywords.iter_mut() {
                *kw = kw.trim().to_lowercase();
            }
            keywords.retain(|kw| !kw.is_empty());
        }
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, ReviewError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ReviewError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ReviewError> {
        for cost_type in CostType::ALL {
            match self.entries.get(&cost_type) {
                Some(keywords) if !keywords.is_empty() => {}
                _ => {
                    return Err(ReviewError::InvalidRecord(format!(
                        "keyword table has no entries for {cost_type}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Default dissatisfaction cutoff: only reviews under three stars count.
pub const DEFAULT_RATING_CUTOFF: u8 = 3;

/// Does `keyword` occur in the text? Single words match as substrings of
/// the normalized text; multi-word phrases match as contiguous token
/// sequences where each token merely has to start with the phrase word,
/// so "much ad" catches "much ads".
fn keyword_matches(keyword: &str, normalized: &str, tokens: &[String]) -> bool {
    let words: Vec<&str> = keyword.split_whitespace().collect();
    match words.as_slice() {
        [] => false,
        [single] => normalized.contains(single),
        phrase => tokens
            .windows(phrase.len())
            .any(|w| w.iter().zip(phrase).all(|(tok, kw)| tok.starts_with(kw))),
    }
}

/// Labels one review with every cost type whose keywords occur, or with
/// nothing when the rating reaches the cutoff (a content user is not
/// complaining). Multi-label results are expected.
pub fn classify_review(
    review: &ReviewRecord,
    table: &KeywordTable,
    rating_cutoff: u8,
) -> BTreeSet<CostType> {
    if review.rating >= rating_cutoff {
        return BTreeSet::new();
    }
    let normalized = normalize(&review.text);
    let tokens: Vec<String> = normalized.split_whitespace().map(str::to_owned).collect();
    let mut labels = BTreeSet::new();
    for (cost_type, keywords) in &table.entries {
        if keywords
            .iter()
            .any(|kw| keyword_matches(kw, &normalized, &tokens))
        {
            labels.insert(*cost_type);
        }
    }
    labels
}

/// Mean rating of the classified reviews per (scheme, cost type) cell.
/// Combinations without any classified review are simply absent. Every
/// app id in `reviews` must appear in `scheme_of_app`.
pub fn aggregate_cost_ratings(
    reviews: &[ReviewRecord],
    table: &KeywordTable,
    scheme_of_app: &BTreeMap<String, String>,
    rating_cutoff: u8,
) -> Result<BTreeMap<(String, CostType), f64>, ReviewError> {
    let mut sums: BTreeMap<(String, CostType), (f64, usize)> = BTreeMap::new();
    for review in reviews {
        let scheme = scheme_of_app
            .get(&review.app_id)
            .ok_or_else(|| ReviewError::UnmappedApp {
                app_id: review.app_id.clone(),
            })?;
        for cost_type in classify_review(review, table, rating_cutoff) {
            let cell = sums.entry((scheme.clone(), cost_type)).or_insert((0.0, 0));
            cell.0 += review.rating as f64;
            cell.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(key, (sum, n))| (key, sum / n as f64))
        .collect())
}

/// Corpus-level shares reported alongside mining output: how many
/// reviews mention ads at all, and how many of those call them annoying
/// or talk about uninstalling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_reviews: usize,
    pub ad_reviews: usize,
    pub ad_review_share: f64,
    pub annoying_share: f64,
    pub uninstalling_share: f64,
}

pub fn corpus_stats(all: &[ReviewRecord], ad_reviews: &[ReviewRecord]) -> CorpusStats {
    let count_containing = |needle: &str| {
        ad_reviews
            .iter()
            .filter(|r| normalize(&r.text).contains(needle))
            .count()
    };
    let denom = ad_reviews.len().max(1) as f64;
    CorpusStats {
        total_reviews: all.len(),
        ad_reviews: ad_reviews.len(),
        ad_review_share: ad_reviews.len() as f64 / all.len().max(1) as f64,
        annoying_share: count_containing("annoying") as f64 / denom,
        uninstalling_share: count_containing("uninstal") as f64 / denom,
    }
}

#[derive(Debug)]
pub enum ReviewError {
    Io(String, std::io::Error),
    MalformedReview { line: usize, source: serde_json::Error },
    MalformedTable(serde_json::Error),
    InvalidRecord(String),
    UnmappedApp { app_id: String },
}

impl fmt::Display for ReviewError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReviewError::Io(path, err) => write!(f, "cannot read {path}: {err}"),
            ReviewError::MalformedReview { line, source } => {
                write!(f, "malformed review on line {line}: {source}")
            }
            ReviewError::MalformedTable(err) => write!(f, "malformed keyword table: {err}"),
            ReviewError::InvalidRecord(msg) => write!(f, "invalid record: {msg}"),
            ReviewError::UnmappedApp { app_id } => {
                write!(f, "app {app_id} has no scheme mapping")
            }
        }
    }
}

impl std::error::Error for ReviewError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ReviewError::Io(_, err) => Some(err),
            ReviewError::MalformedReview { source, .. } => Some(source),
            ReviewError::MalformedTable(err) => Some(err),
            _ => None,
        }
    }
}
