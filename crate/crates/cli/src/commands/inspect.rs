//! `inspect`: detect ad integration schemes in app packages.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;

use intelliad_core::inspector::{detect_networks, extract_ad_formats, AppPackageInput, InputKind};
use intelliad_core::{analytics::report, AdNetworkCatalog, SchemeReport};

use super::Outcome;
use crate::config::Context;

struct SummaryRow {
    app_id: String,
    ad_count: Option<usize>,
    placements: String,
    warnings: usize,
}

#[derive(Serialize)]
struct NetworksReport {
    app_id: String,
    networks: Vec<String>,
}

/// Inspects each app package and writes one JSON report per app plus a
/// summary CSV. With no explicit paths, every subdirectory of the
/// configured apps directory is one app. Decompiled trees yield full
/// scheme reports; raw dex packages yield network detection only.
pub fn run(ctx: &Context, app_paths: &[PathBuf]) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let catalog = ctx.catalog()?;
    let out_dir = ctx.out_dir.join("inspect");

    let apps: Vec<PathBuf> = if app_paths.is_empty() {
        match &ctx.config.apps {
            Some(dir) => {
                let dir = ctx.resolve(dir);
                let mut subdirs = Vec::new();
                let entries = fs::read_dir(&dir)
                    .with_context(|| format!("cannot read apps directory {}", dir.display()))?;
                for entry in entries {
                    let entry = entry?;
                    if entry.file_type()?.is_dir() {
                        subdirs.push(entry.path());
                    }
                }
                subdirs.sort();
                subdirs
            }
            None => Vec::new(),
        }
    } else {
        app_paths.to_vec()
    };

    let mut rows = Vec::new();
    for app in &apps {
        let app_id = app
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| app.display().to_string());
        match inspect_one(app, &app_id, &catalog, &out_dir, &mut outcome) {
            Ok(row) => rows.push(row),
            Err(err) => outcome.error(format!("{}: {err:#}", app.display())),
        }
    }

    let mut csv = String::from("app_id,ad_count,placements,warnings\n");
    for row in &rows {
        let ad_count = row.ad_count.map(|n| n.to_string()).unwrap_or_default();
        writeln!(csv, "{},{},{},{}", row.app_id, ad_count, row.placements, row.warnings).unwrap();
    }
    report::write_text(&out_dir.join("summary.csv"), &csv).context("writing inspect summary")?;
    Ok(outcome)
}

fn inspect_one(
    app: &Path,
    app_id: &str,
    catalog: &AdNetworkCatalog,
    out_dir: &Path,
    outcome: &mut Outcome,
) -> Result<SummaryRow> {
    let input = AppPackageInput::infer(app)?;
    match input.kind() {
        InputKind::DecompiledTree => {
            let scheme = extract_ad_formats(&input, catalog)?;
            let scheme_report = SchemeReport::new(app_id, &scheme);
            report::write_json(&out_dir.join(format!("{app_id}.scheme.json")), &scheme_report)?;
            for warning in &scheme_report.warnings {
                outcome.warn(format!("{app_id}: {warning}"));
            }
            let placements = scheme_report
                .placements
                .iter()
                .map(|p| format!("{}:{}", p.network, p.format))
                .collect::<Vec<_>>()
                .join(";");
            Ok(SummaryRow {
                app_id: app_id.to_string(),
                ad_count: Some(scheme_report.ad_count),
                placements,
                warnings: scheme_report.warnings.len(),
            })
        }
        InputKind::RawDex => {
            let networks: Vec<String> =
                detect_networks(&input, catalog)?.into_iter().collect();
            let nets_report = NetworksReport {
                app_id: app_id.to_string(),
                networks: networks.clone(),
            };
            report::write_json(&out_dir.join(format!("{app_id}.networks.json")), &nets_report)?;
            outcome.warn(format!(
                "{app_id}: raw dex input; networks detected but formats need a decompiled tree"
            ));
            Ok(SummaryRow {
                app_id: app_id.to_string(),
                ad_count: None,
                placements: networks.join(";"),
                warnings: 1,
            })
        }
    }
}
