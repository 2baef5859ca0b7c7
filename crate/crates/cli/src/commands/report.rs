//! `report`: consolidate stage outputs into one report bundle, with
//! optional revenue quantities and per-scheme traffic dollar cost.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};

use intelliad_core::analytics::{
    ad_revenue, ecpm, fill_rate, report, round_half_even, traffic_dollar_cost,
};
use intelliad_core::profiler::Metric;
use intelliad_core::reviews::CostType;

use super::correlate::CorrelateSummary;
use super::profile::ProfileSummary;
use super::reviews::ReviewsSummary;
use super::Outcome;
use crate::config::Context;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevenueReport {
    pub fill_rate: f64,
    pub ecpm: f64,
    pub ad_revenue: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrafficCostRow {
    pub scheme_id: String,
    pub ad_bytes_per_session: f64,
    pub dollars_per_session: f64,
}

/// The consolidated report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revenue: Option<RevenueReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reviews: Option<ReviewsSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlations: Option<BTreeMap<CostType, f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub traffic_costs: Vec<TrafficCostRow>,
}

fn load_stage<T: serde::de::DeserializeOwned>(
    path: &Path,
    outcome: &mut Outcome,
    stage: &str,
) -> Option<T> {
    match fs::read_to_string(path) {
        Ok(text) => match serde_json::from_str(&text) {
            Ok(value) => Some(value),
            Err(err) => {
                outcome.error(format!("{stage}: malformed {}: {err}", path.display()));
                None
            }
        },
        Err(_) => {
            outcome.warn(format!("{stage}: {} not found; section omitted", path.display()));
            None
        }
    }
}

pub fn run(ctx: &Context) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let profile: Option<ProfileSummary> = load_stage(
        &ctx.out_dir.join("profile/profile_summary.json"),
        &mut outcome,
        "profile",
    );
    let reviews: Option<ReviewsSummary> = load_stage(
        &ctx.out_dir.join("reviews/reviews_summary.json"),
        &mut outcome,
        "reviews",
    );
    let correlate: Option<CorrelateSummary> = load_stage(
        &ctx.out_dir.join("correlate/correlate_summary.json"),
        &mut outcome,
        "correlate",
    );

    let revenue = match &ctx.config.revenue {
        Some(inputs) => {
            let fill = fill_rate(inputs)?;
            let cpm = ecpm(inputs)?;
            Some(RevenueReport {
                fill_rate: fill,
                ecpm: cpm,
                ad_revenue: ad_revenue(inputs, cpm, fill),
            })
        }
        None => None,
    };

    let mut traffic_costs = Vec::new();
    if let (Some(plan_config), Some(profile)) = (&ctx.config.data_plan, &profile) {
        let plan = plan_config.to_plan()?;
        for scheme in &profile.schemes {
            let ad_bytes = scheme.delta.total_bytes;
            traffic_costs.push(TrafficCostRow {
                scheme_id: scheme.scheme_id.clone(),
                ad_bytes_per_session: ad_bytes,
                dollars_per_session: round_half_even(traffic_dollar_cost(ad_bytes, &plan), 4),
            });
        }
    }

    let final_report = FinalReport {
        revenue,
        correlations: correlate.as_ref().map(|c| c.coefficients.clone()),
        traffic_costs,
        profile,
        reviews,
    };

    let out_dir = ctx.out_dir.join("report");
    report::write_json(&out_dir.join("report.json"), &final_report)
        .context("writing report.json")?;
    report::write_text(&out_dir.join("report.md"), &render_markdown(&final_report))
        .context("writing report.md")?;

    // Plot-ready long table over everything scheme-keyed.
    let mut long_rows = Vec::new();
    if let Some(profile) = &final_report.profile {
        for scheme in &profile.schemes {
            for metric in Metric::ALL {
                if let Some(rate) = scheme.increase_rates.get(metric) {
                    long_rows.push(report::LongRow {
                        scheme_id: scheme.scheme_id.clone(),
                        series: "increase_rate".into(),
                        key: metric.name().into(),
                        value: rate,
                    });
                }
            }
        }
    }
    if let Some(reviews) = &final_report.reviews {
        for cell in &reviews.cells {
            long_rows.push(report::LongRow {
                scheme_id: cell.scheme_id.clone(),
                series: "avg_rating".into(),
                key: cell.cost_type.name().into(),
                value: cell.avg_rating,
            });
        }
    }
    for row in &final_report.traffic_costs {
        long_rows.push(report::LongRow {
            scheme_id: row.scheme_id.clone(),
            series: "traffic_dollars".into(),
            key: "per_session".into(),
            value: row.dollars_per_session,
        });
    }
    report::write_text(&out_dir.join("long.csv"), &report::long_csv(&long_rows, 6))
        .context("writing long.csv")?;
    Ok(outcome)
}

fn render_markdown(final_report: &FinalReport) -> String {
    let mut md = String::from("# Ad cost analysis\n");
    if let Some(revenue) = &final_report.revenue {
        md.push_str("\n## Revenue model\n\n");
        writeln!(md, "- fill rate: {:.4}", revenue.fill_rate).unwrap();
        writeln!(md, "- eCPM: {:.4}", revenue.ecpm).unwrap();
        writeln!(md, "- projected ad revenue: {:.4}", revenue.ad_revenue).unwrap();
    }
    if let Some(profile) = &final_report.profile {
        md.push_str("\n## Cost increase rates over the prototype\n\n");
        md.push_str("| scheme | cpu | memory | threads | bytes | packets | power |\n");
        md.push_str("|---|---|---|---|---|---|---|\n");
        for scheme in &profile.schemes {
            let cell = |m: Metric| {
                scheme
                    .increase_rates
                    .get(m)
                    .map(|r| format!("{r:.4}"))
                    .unwrap_or_else(|| "undefined".into())
            };
            writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                scheme.scheme_id,
                cell(Metric::CpuUtilAvgPct),
                cell(Metric::MemRssAvgKb),
                cell(Metric::ThreadCountAvg),
                cell(Metric::TotalBytes),
                cell(Metric::PacketCount),
                cell(Metric::PowerMw),
            )
            .unwrap();
        }
        if !profile.stdev_by_metric.is_empty() {
            md.push_str("\nSpread of increase rates across schemes (sample stdev):\n\n");
            for (metric, stdev) in &profile.stdev_by_metric {
                writeln!(md, "- {metric}: {stdev:.4}").unwrap();
            }
        }
    }
    if let Some(reviews) = &final_report.reviews {
        md.push_str("\n## User perception\n\n");
        writeln!(
            md,
            "{} of {} reviews mention ads ({:.1}%); {:.1}% of those call them annoying, {:.1}% mention uninstalling.",
            reviews.stats.ad_reviews,
            reviews.stats.total_reviews,
            reviews.stats.ad_review_share * 100.0,
            reviews.stats.annoying_share * 100.0,
            reviews.stats.uninstalling_share * 100.0,
        )
        .unwrap();
        md.push_str("\nAverage rating of complaining reviews per cost type:\n\n");
        for (cost_type, avg) in &reviews.global_avg_rating {
            writeln!(md, "- {cost_type}: {avg:.3}").unwrap();
        }
    }
    if let Some(correlations) = &final_report.correlations {
        md.push_str("\n## Measured cost vs. user rating\n\n");
        md.push_str("| cost type | pearson r |\n|---|---|\n");
        for (cost_type, r) in correlations {
            writeln!(md, "| {cost_type} | {r:.3} |").unwrap();
        }
    }
    if !final_report.traffic_costs.is_empty() {
        md.push_str("\n## Traffic dollar cost per session\n\n");
        md.push_str("| scheme | ad bytes | dollars |\n|---|---|---|\n");
        for row in &final_report.traffic_costs {
            writeln!(
                md,
                "| {} | {:.0} | {:.4} |",
                row.scheme_id, row.ad_bytes_per_session, row.dollars_per_session
            )
            .unwrap();
        }
    }
    md
}
