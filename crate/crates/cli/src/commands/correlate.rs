//! `correlate`: join measured costs with review-derived ratings by
//! scheme and compute the per-cost-type Pearson correlations.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};

use intelliad_core::analytics::{
    correlate_costs_vs_ratings, report, SchemeObservation,
};
use intelliad_core::profiler::Metric;
use intelliad_core::reviews::CostType;

use super::profile::ProfileSummary;
use super::reviews::ReviewsSummary;
use super::Outcome;
use crate::config::Context;

/// The correlation stage's JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelateSummary {
    pub coefficients: BTreeMap<CostType, f64>,
    pub observations: Vec<SchemeObservation>,
    pub warnings: Vec<String>,
}

/// How measured values map onto cost types: ad count for quantity, CPU
/// utilization for memory/CPU, total bytes for traffic, estimated power
/// for battery — each as the increase rate over the prototype except the
/// raw ad count.
fn measured_for(scheme: &super::profile::SchemeCostReport) -> BTreeMap<CostType, f64> {
    let mut measured = BTreeMap::new();
    if let Some(n) = scheme.ad_count {
        measured.insert(CostType::NumAds, n as f64);
    }
    if let Some(rate) = scheme.increase_rates.get(Metric::CpuUtilAvgPct) {
        measured.insert(CostType::MemCpu, rate);
    }
    if let Some(rate) = scheme.increase_rates.get(Metric::TotalBytes) {
        measured.insert(CostType::Traffic, rate);
    }
    if let Some(rate) = scheme.increase_rates.get(Metric::PowerMw) {
        measured.insert(CostType::Battery, rate);
    }
    measured
}

pub fn run(ctx: &Context) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let profile_path = ctx.out_dir.join("profile/profile_summary.json");
    let reviews_path = ctx.out_dir.join("reviews/reviews_summary.json");
    let profile: ProfileSummary = serde_json::from_str(
        &fs::read_to_string(&profile_path)
            .with_context(|| format!("cannot read {}", profile_path.display()))?,
    )
    .context("malformed profile summary")?;
    let reviews: ReviewsSummary = serde_json::from_str(
        &fs::read_to_string(&reviews_path)
            .with_context(|| format!("cannot read {}", reviews_path.display()))?,
    )
    .context("malformed reviews summary")?;

    let mut ratings_by_scheme: BTreeMap<String, BTreeMap<CostType, f64>> = BTreeMap::new();
    for cell in &reviews.cells {
        ratings_by_scheme
            .entry(cell.scheme_id.clone())
            .or_default()
            .insert(cell.cost_type, cell.avg_rating);
    }

    let profiled: BTreeSet<&String> = profile.schemes.iter().map(|s| &s.scheme_id).collect();
    let mut observations = Vec::new();
    for scheme in &profile.schemes {
        match ratings_by_scheme.get(&scheme.scheme_id) {
            Some(ratings) => observations.push(SchemeObservation {
                scheme_id: scheme.scheme_id.clone(),
                measured: measured_for(scheme),
                avg_rating: ratings.clone(),
            }),
            None => outcome.warn(format!(
                "{}: profiled but no review ratings; excluded from correlation",
                scheme.scheme_id
            )),
        }
    }
    for scheme_id in ratings_by_scheme.keys() {
        if !profiled.contains(scheme_id) {
            outcome.warn(format!(
                "{scheme_id}: review ratings but no profile; excluded from correlation"
            ));
        }
    }

    let (coefficients, correlation_warnings) = correlate_costs_vs_ratings(&observations)?;
    for warning in correlation_warnings {
        outcome.warn(warning.to_string());
    }

    let summary = CorrelateSummary {
        coefficients: coefficients.clone(),
        observations: observations.clone(),
        warnings: outcome.warnings.clone(),
    };
    let out_dir = ctx.out_dir.join("correlate");
    report::write_json(&out_dir.join("correlate_summary.json"), &summary)
        .context("writing correlate summary")?;
    report::write_text(
        &out_dir.join("correlations.csv"),
        &report::correlations_csv(&coefficients, &report::ReportRounding::default()),
    )
    .context("writing correlations")?;

    let mut long_rows = Vec::new();
    for obs in &observations {
        for (cost_type, value) in &obs.measured {
            long_rows.push(report::LongRow {
                scheme_id: obs.scheme_id.clone(),
                series: "measured".into(),
                key: cost_type.name().into(),
                value: *value,
            });
        }
        for (cost_type, value) in &obs.avg_rating {
            long_rows.push(report::LongRow {
                scheme_id: obs.scheme_id.clone(),
                series: "rating".into(),
                key: cost_type.name().into(),
                value: *value,
            });
        }
    }
    report::write_text(&out_dir.join("observations.csv"), &report::long_csv(&long_rows, 6))
        .context("writing observations")?;
    Ok(outcome)
}
