//! Phrase candidate extraction.
//!
//! User concerns read better as two-word phrases than as single words, so
//! candidates are the adjacent word pairs left after lowercasing,
//! punctuation stripping, and stopword removal, counted over the corpus.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ReviewError, ReviewRecord};

const BUILTIN_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// The small English stopword list bundled with the crate.
pub fn default_stopwords() -> BTreeSet<String> {
    BUILTIN_STOPWORDS
        .lines()
        .map(|w| w.trim().to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Loads a one-word-per-line stopword file.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>, ReviewError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ReviewError::Io(path.display().to_string(), e))?;
    Ok(text
        .lines()
        .map(|w| w.trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect())
}

/// Lowercases and replaces everything but letters and digits with spaces.
pub fn normalize(text: &str) -> String {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect()
}

/// Normalized tokens of one text with stopwords removed.
pub fn tokenize_filtered(text: &str, stopwords: &BTreeSet<String>) -> Vec<String> {
    normalize(text)
        .split_whitespace()
        .filter(|w| !stopwords.contains(*w))
        .map(str::to_owned)
        .collect()
}

/// An ordered pair of adjacent non-stopword words and its corpus count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhraseCandidate {
    pub tokens: [String; 2],
    pub count: usize,
}

impl PhraseCandidate {
    pub fn text(&self) -> String {
        format!("{} {}", self.tokens[0], self.tokens[1])
    }
}

/// All adjacent token pairs across the corpus with their counts, ordered
/// by count descending then lexicographically. Pairs never span review
/// boundaries.
pub fn extract_phrase_candidates(
    reviews: &[ReviewRecord],
    stopwords: &BTreeSet<String>,
) -> Vec<PhraseCandidate> {
    let mut counts: BTreeMap<[String; 2], usize> = BTreeMap::new();
    for review in reviews {
        let tokens = tokenize_filtered(&review.text, stopwords);
        for pair in tokens.windows(2) {
            *counts
                .entry([pair[0].clone(), pair[1].clone()])
                .or_insert(0) += 1;
        }
    }
    let mut candidates: Vec<PhraseCandidate> = counts
        .into_iter()
        .map(|(tokens, count)| PhraseCandidate { tokens, count })
        .collect();
    candidates.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.tokens.cmp(&b.tokens)));
    candidates
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(text: &str) -> ReviewRecord {
        ReviewRecord {
            app_id: "app".into(),
            rating: 1,
            date: "2016-01-01".into(),
            text: text.into(),
        }
    }

    #[test]
    fn sliding_pairs_are_counted() {
        let candidates =
            extract_phrase_candidates(&[review("battery drain battery drain")], &BTreeSet::new());
        let as_map: BTreeMap<String, usize> = candidates
            .iter()
            .map(|c| (c.text(), c.count))
            .collect();
        assert_eq!(as_map["battery drain"], 2);
        assert_eq!(as_map["drain battery"], 1);
        assert_eq!(candidates.len(), 2);
        // Highest count first.
        assert_eq!(candidates[0].text(), "battery drain");
    }

    #[test]
    fn stopword_only_review_yields_nothing() {
        let stopwords = default_stopwords();
        assert!(extract_phrase_candidates(&[review("it is the and")], &stopwords).is_empty());
    }

    #[test]
    fn stopwords_do_not_break_adjacency() {
        let stopwords = default_stopwords();
        let candidates = extract_phrase_candidates(&[review("battery of doom")], &stopwords);
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].text(), "battery doom");
    }

    #[test]
    fn punctuation_and_case_are_stripped() {
        let candidates =
            extract_phrase_candidates(&[review("Battery... DRAIN!")], &BTreeSet::new());
        assert_eq!(candidates[0].text(), "battery drain");
    }

    #[test]
    fn counts_match_brute_force_recount() {
        let stopwords = default_stopwords();
        let texts = [
            "so many ads in this app",
            "many ads drain battery",
            "battery drain all day",
            "ads everywhere ads everywhere",
            "slow and laggy with ads",
            "ads pop up without wifi",
            "wifi data gone because of ads",
            "premium version has no ads",
            "slow loading every single time",
            "ads slow the phone down",
            "battery drain battery drain",
            "tried uninstalling over the ads",
            "memory hog with banner ads",
            "many ads many ads many ads",
            "interstitial ads block the screen",
            "free version full of ads",
            "laggy scrolling since the update",
            "ads use my data rate",
            "power drain while idle",
            "no complaints at all",
        ];
        let reviews: Vec<ReviewRecord> = texts.iter().map(|t| review(t)).collect();
        let candidates = extract_phrase_candidates(&reviews, &stopwords);

        // Oracle: recount naively, token list by token list.
        let mut expected: BTreeMap<(String, String), usize> = BTreeMap::new();
        for text in texts {
            let tokens = tokenize_filtered(text, &stopwords);
            for i in 1..tokens.len() {
                *expected
                    .entry((tokens[i - 1].clone(), tokens[i].clone()))
                    .or_insert(0) += 1;
            }
        }
        assert_eq!(candidates.len(), expected.len());
        for c in &candidates {
            assert_eq!(
                expected[&(c.tokens[0].clone(), c.tokens[1].clone())],
                c.count
            );
        }
    }
}
