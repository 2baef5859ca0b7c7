//! `reviews`: filter ad-related reviews, mine cost topics, classify
//! complaints, and aggregate ratings per scheme.

use std::collections::BTreeMap;

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};

use intelliad_core::analytics::report::{self, ReportRounding};
use intelliad_core::reviews::{
    aggregate_cost_ratings, classify_review, cluster_phrases, corpus_stats, embed_phrases,
    extract_phrase_candidates, filter_ad_reviews, load_reviews_jsonl, tokenize_filtered,
    ClusterError, CorpusStats, CostType, PpmiEmbedder,
};

use super::Outcome;
use crate::config::Context;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatingCell {
    pub scheme_id: String,
    pub cost_type: CostType,
    pub avg_rating: f64,
}

/// The review stage's JSON output: corpus shares, per-(scheme, cost
/// type) average ratings, and corpus-wide averages per cost type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewsSummary {
    pub stats: CorpusStats,
    pub global_avg_rating: BTreeMap<CostType, f64>,
    pub cells: Vec<RatingCell>,
}

/// Topic clusters over the mined phrases: cluster id to its most
/// frequent phrases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub phrase_count: usize,
    pub clusters: BTreeMap<usize, Vec<String>>,
}

const TOP_PHRASES_PER_CLUSTER: usize = 15;

pub fn run(ctx: &Context) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let reviews_path = ctx.resolve(
        ctx.config
            .reviews
            .as_ref()
            .context("config has no reviews path")?,
    );
    let all_reviews = load_reviews_jsonl(&reviews_path)
        .with_context(|| format!("loading reviews {}", reviews_path.display()))?;
    let table = ctx.keyword_table()?;
    let stopwords = ctx.stopwords()?;
    let scheme_map = ctx.scheme_map()?;
    let out_dir = ctx.out_dir.join("reviews");

    let ad_reviews = filter_ad_reviews(&all_reviews);
    let stats = corpus_stats(&all_reviews, &ad_reviews);

    // Rating aggregation per scheme and corpus-wide.
    let cells_map = aggregate_cost_ratings(&ad_reviews, &table, &scheme_map, ctx.rating_cutoff)?;
    let cells: Vec<RatingCell> = cells_map
        .iter()
        .map(|((scheme_id, cost_type), avg)| RatingCell {
            scheme_id: scheme_id.clone(),
            cost_type: *cost_type,
            avg_rating: *avg,
        })
        .collect();
    let mut global_sums: BTreeMap<CostType, (f64, usize)> = BTreeMap::new();
    for review in &ad_reviews {
        for cost_type in classify_review(review, &table, ctx.rating_cutoff) {
            let cell = global_sums.entry(cost_type).or_insert((0.0, 0));
            cell.0 += review.rating as f64;
            cell.1 += 1;
        }
    }
    let global_avg_rating: BTreeMap<CostType, f64> = global_sums
        .into_iter()
        .map(|(cost_type, (sum, n))| (cost_type, sum / n as f64))
        .collect();

    let summary = ReviewsSummary {
        stats,
        global_avg_rating,
        cells,
    };
    report::write_json(&out_dir.join("reviews_summary.json"), &summary)
        .context("writing reviews summary")?;
    report::write_text(
        &out_dir.join("ratings_by_cost_type.csv"),
        &report::ratings_csv(&cells_map, &ReportRounding::default()),
    )
    .context("writing ratings table")?;

    // Topic mining over the ad-related subset.
    let candidates = extract_phrase_candidates(&ad_reviews, &stopwords);
    let token_lists: Vec<Vec<String>> = ad_reviews
        .iter()
        .map(|r| tokenize_filtered(&r.text, &stopwords))
        .collect();
    let embedder = PpmiEmbedder::fit(
        &token_lists,
        ctx.config.defaults.embed_dim,
        ctx.config.defaults.embed_window,
    );
    let (vectors, embed_warnings) = embed_phrases(&candidates, &embedder);
    for warning in embed_warnings {
        outcome.warn(warning.to_string());
    }
    match cluster_phrases(&vectors, ctx.k, ctx.seed) {
        Ok(clusters) => {
            let trimmed: BTreeMap<usize, Vec<String>> = clusters
                .into_iter()
                .map(|(id, mut phrases)| {
                    phrases.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.tokens.cmp(&b.tokens)));
                    phrases.truncate(TOP_PHRASES_PER_CLUSTER);
                    (id, phrases.iter().map(|p| p.text()).collect())
                })
                .collect();
            let cluster_report = ClusterReport {
                k: ctx.k,
                phrase_count: vectors.len(),
                clusters: trimmed,
            };
            report::write_json(&out_dir.join("clusters.json"), &cluster_report)
                .context("writing clusters")?;
        }
        Err(err @ ClusterError::TooFewPoints { .. }) => {
            outcome.warn(format!("clustering skipped: {err}"));
        }
        Err(err) => outcome.error(format!("clustering failed: {err}")),
    }
    Ok(outcome)
}
