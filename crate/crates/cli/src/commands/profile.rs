//! `profile`: turn generated or collected traces into per-scheme cost
//! vectors, power estimates, and increase rates over the baseline.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};

use intelliad_core::analytics::{report, sample_stdev};
use intelliad_core::power::PowerModel;
use intelliad_core::profiler::{
    aggregate_runs, compute_cost_vector, estimate_power, load_session, separate_costs,
    CostVector, IncreaseRates, Metric,
};

use super::simulate::TraceIndex;
use super::Outcome;
use crate::config::Context;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineReport {
    pub label: String,
    pub runs: usize,
    pub cost: CostVector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeCostReport {
    pub scheme_id: String,
    #[serde(default)]
    pub ad_count: Option<usize>,
    pub label: String,
    pub runs: usize,
    pub cost: CostVector,
    pub delta: CostVector,
    pub increase_rates: IncreaseRates,
}

/// The profile stage's JSON output: aggregated costs per scheme and the
/// spread of each metric's increase rate across schemes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub baseline: BaselineReport,
    pub schemes: Vec<SchemeCostReport>,
    /// Sample stdev of the per-scheme increase rates, for metrics where
    /// at least two schemes had a defined rate.
    pub stdev_by_metric: BTreeMap<String, f64>,
}

pub fn run(ctx: &Context, traces: Option<&Path>) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let traces_dir = traces.map(Path::to_path_buf).unwrap_or_else(|| ctx.traces_dir());
    let index_path = traces_dir.join("index.json");
    let text = fs::read_to_string(&index_path)
        .with_context(|| format!("cannot read trace index {}", index_path.display()))?;
    let index: TraceIndex = serde_json::from_str(&text)
        .with_context(|| format!("malformed trace index {}", index_path.display()))?;
    let model = ctx.power_model()?;

    // The baseline must aggregate cleanly; nothing downstream makes
    // sense without it.
    let baseline_cost = aggregate_set(
        &index.baseline.runs,
        &traces_dir,
        &model,
        index.runs_expected,
        &index.baseline.label,
        &mut outcome,
    )?;
    let Some(baseline_cost) = baseline_cost else {
        bail!("baseline {} has no loadable runs", index.baseline.label);
    };

    let mut schemes = Vec::new();
    for scheme in &index.schemes {
        match aggregate_set(
            &scheme.runs,
            &traces_dir,
            &model,
            index.runs_expected,
            &scheme.label,
            &mut outcome,
        ) {
            Ok(Some(cost)) => {
                let separation = separate_costs(&cost, &baseline_cost);
                schemes.push(SchemeCostReport {
                    scheme_id: scheme.scheme_id.clone(),
                    ad_count: scheme.ad_count,
                    label: scheme.label.clone(),
                    runs: scheme.runs.len(),
                    cost,
                    delta: separation.delta,
                    increase_rates: separation.increase_rates,
                });
            }
            Ok(None) => outcome.error(format!("{}: no loadable runs", scheme.scheme_id)),
            Err(err) => outcome.error(format!("{}: {err:#}", scheme.scheme_id)),
        }
    }

    let mut stdev_by_metric = BTreeMap::new();
    for metric in Metric::ALL {
        let rates: Vec<f64> = schemes
            .iter()
            .filter_map(|s| s.increase_rates.get(metric))
            .collect();
        if rates.len() >= 2 {
            stdev_by_metric.insert(metric.name().to_string(), sample_stdev(&rates)?);
        } else {
            outcome.warn(format!(
                "{}: {} scheme(s) with a defined rate; spread not computed",
                metric.name(),
                rates.len()
            ));
        }
    }

    let summary = ProfileSummary {
        baseline: BaselineReport {
            label: index.baseline.label.clone(),
            runs: index.baseline.runs.len(),
            cost: baseline_cost,
        },
        schemes,
        stdev_by_metric,
    };

    let out_dir = ctx.out_dir.join("profile");
    report::write_json(&out_dir.join("profile_summary.json"), &summary)
        .context("writing profile summary")?;
    let rows: BTreeMap<String, IncreaseRates> = summary
        .schemes
        .iter()
        .map(|s| (s.scheme_id.clone(), s.increase_rates))
        .collect();
    report::write_text(
        &out_dir.join("increase_rates.csv"),
        &report::increase_rates_csv(&rows, &report::ReportRounding::default()),
    )
    .context("writing increase rates")?;
    for report in &summary.schemes {
        report::write_json(
            &out_dir.join(format!("{}.cost.json", report.scheme_id)),
            report,
        )?;
    }
    Ok(outcome)
}

/// Loads and powers every run of one session set, then aggregates.
/// Individual run failures are reported and skipped; returns None when
/// no run survived.
fn aggregate_set(
    runs: &[String],
    traces_dir: &Path,
    model: &PowerModel,
    runs_expected: usize,
    label: &str,
    outcome: &mut Outcome,
) -> Result<Option<CostVector>> {
    let mut costs = Vec::new();
    for rel in runs {
        let manifest = traces_dir.join(rel);
        let powered = load_session(&manifest)
            .map_err(anyhow::Error::from)
            .and_then(|session| {
                let (cost, warnings) = compute_cost_vector(&session)?;
                for warning in warnings {
                    outcome.warn(format!("{label}: {rel}: {warning}"));
                }
                Ok(estimate_power(&cost, model)?)
            });
        match powered {
            Ok(cost) => costs.push(cost),
            Err(err) => outcome.error(format!("{label}: {rel}: {err:#}")),
        }
    }
    if costs.is_empty() {
        return Ok(None);
    }
    let (mean, warning) = aggregate_runs(&costs, runs_expected)?;
    if let Some(warning) = warning {
        outcome.warn(format!("{label}: {warning}"));
    }
    Ok(Some(mean))
}
