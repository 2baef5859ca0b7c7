//! `simulate`: generate seeded synthetic measurement traces.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};

use intelliad_core::analytics::report;
use intelliad_core::simulate::{generate_session, SessionPlan};

use super::Outcome;
use crate::config::{derive_seed, Context};

/// Input to a simulation batch: one baseline (ad-free prototype) plan
/// plus one plan per ad scheme, all generated `runs` times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub baseline: SessionPlan,
    pub schemes: Vec<SchemeScenario>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeScenario {
    pub scheme_id: String,
    /// Ads embedded in this scheme, carried through to correlation.
    #[serde(default)]
    pub ad_count: Option<usize>,
    pub plan: SessionPlan,
}

/// Index of generated sessions, written next to the traces. Paths are
/// relative to the index file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceIndex {
    pub runs_expected: usize,
    pub baseline: SessionSet,
    pub schemes: Vec<SchemeSet>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionSet {
    pub label: String,
    pub runs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeSet {
    pub scheme_id: String,
    #[serde(default)]
    pub ad_count: Option<usize>,
    pub label: String,
    pub runs: Vec<String>,
}

pub fn run(ctx: &Context, plan_path: Option<&Path>) -> Result<Outcome> {
    let outcome = Outcome::default();
    let scenario_path = match plan_path {
        Some(path) => path.to_path_buf(),
        None => ctx.resolve(
            ctx.config
                .scenario
                .as_ref()
                .context("no --plan given and config has no scenario path")?,
        ),
    };
    let text = fs::read_to_string(&scenario_path)
        .with_context(|| format!("cannot read scenario {}", scenario_path.display()))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .with_context(|| format!("malformed scenario {}", scenario_path.display()))?;

    let runs = scenario.runs.unwrap_or(ctx.runs);
    let seed = scenario.seed.unwrap_or(ctx.seed);
    let traces_dir = ctx.traces_dir();

    let baseline = generate_set(&scenario.baseline, runs, seed, &traces_dir)?;
    let mut schemes = Vec::new();
    for scheme in &scenario.schemes {
        let set = generate_set(&scheme.plan, runs, seed, &traces_dir)?;
        schemes.push(SchemeSet {
            scheme_id: scheme.scheme_id.clone(),
            ad_count: scheme.ad_count,
            label: set.label.clone(),
            runs: set.runs,
        });
    }

    let index = TraceIndex {
        runs_expected: runs,
        baseline,
        schemes,
    };
    report::write_json(&traces_dir.join("index.json"), &index)
        .context("writing trace index")?;
    Ok(outcome)
}

fn generate_set(
    plan: &SessionPlan,
    runs: usize,
    seed: u64,
    traces_dir: &Path,
) -> Result<SessionSet> {
    let mut manifest_paths = Vec::new();
    for run in 0..runs {
        let mut run_plan = plan.clone();
        run_plan.seed = derive_seed(seed, &plan.label, run);
        let run_dir = traces_dir.join(&plan.label).join(format!("run{run}"));
        let generated = generate_session(&run_plan, &run_dir)
            .with_context(|| format!("generating {} run {run}", plan.label))?;
        let rel: PathBuf = generated
            .manifest_path
            .strip_prefix(traces_dir)
            .unwrap_or(&generated.manifest_path)
            .to_path_buf();
        manifest_paths.push(rel.to_string_lossy().replace('\\', "/"));
    }
    Ok(SessionSet {
        label: plan.label.clone(),
        runs: manifest_paths,
    })
}
