//! Report file emission.
//!
//! All writers are deterministic byte for byte given the same inputs:
//! rows follow the callers' ordering (which use sorted maps), floats are
//! formatted at fixed precision, and no timestamps are embedded. Files
//! land via write-temp-then-rename.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::fsio::atomic_write;
use crate::profiler::{IncreaseRates, Metric};
use crate::reviews::CostType;

/// Decimal places used per table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportRounding {
    pub rates: usize,
    pub ratings: usize,
    pub correlations: usize,
    pub currency: usize,
}

impl Default for ReportRounding {
    fn default() -> Self {
        ReportRounding {
            rates: 6,
            ratings: 3,
            correlations: 3,
            currency: 4,
        }
    }
}

fn fixed(value: f64, decimals: usize) -> String {
    format!("{value:.decimals$}")
}

/// CSV of increase rates: one row per scheme, one column per metric.
/// Metrics with an undefined rate (zero baseline) render as "undefined".
pub fn increase_rates_csv(
    rows: &BTreeMap<String, IncreaseRates>,
    rounding: &ReportRounding,
) -> String {
    let mut out = String::from("scheme_id");
    for metric in Metric::ALL {
        write!(out, ",{}", metric.name()).unwrap();
    }
    out.push('\n');
    for (scheme, rates) in rows {
        write!(out, "{scheme}").unwrap();
        for metric in Metric::ALL {
            match rates.get(metric) {
                Some(rate) => write!(out, ",{}", fixed(rate, rounding.rates)).unwrap(),
                None => out.push_str(",undefined"),
            }
        }
        out.push('\n');
    }
    out
}

/// CSV of average ratings: one row per scheme, one column per cost type.
/// Missing cells stay empty.
pub fn ratings_csv(
    cells: &BTreeMap<(String, CostType), f64>,
    rounding: &ReportRounding,
) -> String {
    let mut out = String::from("scheme_id");
    for cost_type in CostType::ALL {
        write!(out, ",{cost_type}").unwrap();
    }
    out.push('\n');
    let schemes: std::collections::BTreeSet<&String> =
        cells.keys().map(|(scheme, _)| scheme).collect();
    for scheme in schemes {
        write!(out, "{scheme}").unwrap();
        for cost_type in CostType::ALL {
            match cells.get(&(scheme.clone(), cost_type)) {
                Some(rating) => write!(out, ",{}", fixed(*rating, rounding.ratings)).unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// CSV of per-cost-type Pearson coefficients.
pub fn correlations_csv(
    coefficients: &BTreeMap<CostType, f64>,
    rounding: &ReportRounding,
) -> String {
    let mut out = String::from("cost_type,pearson_r\n");
    for (cost_type, r) in coefficients {
        writeln!(out, "{cost_type},{}", fixed(*r, rounding.correlations)).unwrap();
    }
    out
}

/// One row of the plot-ready long-format table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRow {
    pub scheme_id: String,
    /// Which series the value belongs to: "measured" or "rating".
    pub series: String,
    /// Metric or cost type name.
    pub key: String,
    pub value: f64,
}

/// Long-format CSV for external charting tools.
pub fn long_csv(rows: &[LongRow], decimals: usize) -> String {
    let mut out = String::from("scheme_id,series,key,value\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.scheme_id,
            row.series,
            row.key,
            fixed(row.value, decimals)
        )
        .unwrap();
    }
    out
}

/// Serializes `value` as pretty JSON with a trailing newline and writes
/// it atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Writes already-rendered text atomically.
pub fn write_text(path: &Path, contents: &str) -> io::Result<()> {
    atomic_write(path, contents.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increase_rates_render_undefined_cells() {
        let mut rows = BTreeMap::new();
        rows.insert(
            "A1".to_string(),
            IncreaseRates {
                cpu_util_avg_pct: Some(0.686),
                total_bytes: None,
                ..IncreaseRates::default()
            },
        );
        let csv = increase_rates_csv(&rows, &ReportRounding::default());
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("scheme_id,mem_rss_avg_kb,"));
        let row = lines.next().unwrap();
        assert!(row.contains(",0.686000,"));
        assert!(row.contains(",undefined"));
    }

    #[test]
    fn ratings_csv_leaves_missing_cells_empty() {
        let mut cells = BTreeMap::new();
        cells.insert(("A1".to_string(), CostType::Battery), 1.25);
        let csv = ratings_csv(&cells, &ReportRounding::default());
        assert_eq!(csv, "scheme_id,num_ads,mem_cpu,traffic,battery\nA1,,,,1.250\n");
    }

    #[test]
    fn emission_is_deterministic() {
        let mut coefficients = BTreeMap::new();
        coefficients.insert(CostType::NumAds, -0.313);
        coefficients.insert(CostType::Battery, -0.511);
        let a = correlations_csv(&coefficients, &ReportRounding::default());
        let b = correlations_csv(&coefficients, &ReportRounding::default());
        assert_eq!(a, b);
        assert_eq!(a, "cost_type,pearson_r\nnum_ads,-0.313\nbattery,-0.511\n");
    }

    #[test]
    fn long_rows_keep_input_order() {
        let rows = vec![
            LongRow {
                scheme_id: "A2".into(),
                series: "measured".into(),
                key: "total_bytes".into(),
                value: 10.0,
            },
            LongRow {
                scheme_id: "A1".into(),
                series: "rating".into(),
                key: "battery".into(),
                value: 1.2,
            },
        ];
        let csv = long_csv(&rows, 3);
        assert_eq!(
            csv,
            "scheme_id,series,key,value\nA2,measured,total_bytes,10.000\nA1,rating,battery,1.200\n"
        );
    }

    #[test]
    fn json_writer_is_atomic_and_newline_terminated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_json(&path, &BTreeMap::from([("k", 1)])).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        assert!(text.contains("\"k\": 1"));
    }
}
