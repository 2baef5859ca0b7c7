//! Session parsing, cost metrics, and cost separation.
//!
//! A measurement session is a time-aligned bundle of top samples, packet
//! records, and /proc samples for one app run. From a session we compute
//! a [`CostVector`] of six averaged metrics plus estimated power, subtract
//! an ad-free prototype run to isolate ad-attributable cost, and average
//! repeated runs.

pub mod logs;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::power::{self, PowerError, PowerModel};

pub use logs::{
    load_session, parse_packet_log, parse_proc_log, parse_top_log, write_packet_log,
    write_proc_log, write_top_log, LogParseError, SessionManifest,
};

/// One `top` reading: resident set size and CPU occupancy at time `t_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopSample {
    pub t_s: f64,
    pub rss_kb: f64,
    /// Core-normalized CPU occupancy in [0, 100].
    pub cpu_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub t_s: f64,
    pub direction: Direction,
    pub bytes: u64,
}

/// One /proc reading: live thread count and current CPU frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcSample {
    pub t_s: f64,
    pub thread_count: u32,
    pub cpu_freq_khz: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSession {
    pub label: String,
    pub duration_s: f64,
    pub top_samples: Vec<TopSample>,
    pub packets: Vec<PacketRecord>,
    pub proc_samples: Vec<ProcSample>,
}

impl MeasurementSession {
    /// Checks ordering and duration bounds across all three sample lists.
    pub fn validate(&self) -> Result<(), ProfileError> {
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(ProfileError::ZeroDuration);
        }
        let check = |name: &str, ts: &mut dyn Iterator<Item = f64>| -> Result<(), ProfileError> {
            let mut last = f64::NEG_INFINITY;
            for t in ts {
                if t < last {
                    return Err(ProfileError::InvalidSession(format!(
                        "{name} samples not sorted by time"
                    )));
                }
                if t > self.duration_s {
                    return Err(ProfileError::InvalidSession(format!(
                        "{name} timestamp {t} exceeds duration {}",
                        self.duration_s
                    )));
                }
                last = t;
            }
            Ok(())
        };
        check("top", &mut self.top_samples.iter().map(|s| s.t_s))?;
        check("packet", &mut self.packets.iter().map(|p| p.t_s))?;
        check("proc", &mut self.proc_samples.iter().map(|s| s.t_s))?;
        Ok(())
    }
}

/// The measured metrics of one session, all as finite nonnegative scalars
/// for a raw session. Deltas produced by [`separate_costs`] reuse the same
/// shape and may carry negative fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    pub mem_rss_avg_kb: f64,
    pub cpu_util_avg_pct: f64,
    pub thread_count_avg: f64,
    pub total_bytes: f64,
    pub packet_count: f64,
    pub avg_packet_rate_pps: f64,
    pub avg_cpu_freq_khz: f64,
    pub power_mw: f64,
}

/// Identifies one field of a [`CostVector`], for generic field-wise math
/// and stable report column naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    MemRssAvgKb,
    CpuUtilAvgPct,
    ThreadCountAvg,
    TotalBytes,
    PacketCount,
    AvgPacketRatePps,
    AvgCpuFreqKhz,
    PowerMw,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::MemRssAvgKb,
        Metric::CpuUtilAvgPct,
        Metric::ThreadCountAvg,
        Metric::TotalBytes,
        Metric::PacketCount,
        Metric::AvgPacketRatePps,
        Metric::AvgCpuFreqKhz,
        Metric::PowerMw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MemRssAvgKb => "mem_rss_avg_kb",
            Metric::CpuUtilAvgPct => "cpu_util_avg_pct",
            Metric::ThreadCountAvg => "thread_count_avg",
            Metric::TotalBytes => "total_bytes",
            Metric::PacketCount => "packet_count",
            Metric::AvgPacketRatePps => "avg_packet_rate_pps",
            Metric::AvgCpuFreqKhz => "avg_cpu_freq_khz",
            Metric::PowerMw => "power_mw",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl CostVector {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::MemRssAvgKb => self.mem_rss_avg_kb,
            Metric::CpuUtilAvgPct => self.cpu_util_avg_pct,
            Metric::ThreadCountAvg => self.thread_count_avg,
            Metric::TotalBytes => self.total_bytes,
            Metric::PacketCount => self.packet_count,
            Metric::AvgPacketRatePps => self.avg_packet_rate_pps,
            Metric::AvgCpuFreqKhz => self.avg_cpu_freq_khz,
            Metric::PowerMw => self.power_mw,
        }
    }

    pub fn set(&mut self, metric: Metric, value: f64) {
        match metric {
            Metric::MemRssAvgKb => self.mem_rss_avg_kb = value,
            Metric::CpuUtilAvgPct => self.cpu_util_avg_pct = value,
            Metric::ThreadCountAvg => self.thread_count_avg = value,
            Metric::TotalBytes => self.total_bytes = value,
            Metric::PacketCount => self.packet_count = value,
            Metric::AvgPacketRatePps => self.avg_packet_rate_pps = value,
            Metric::AvgCpuFreqKhz => self.avg_cpu_freq_khz = value,
            Metric::PowerMw => self.power_mw = value,
        }
    }
}

/// Non-fatal observations produced while computing or combining vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProfileWarning {
    EmptyTopSamples,
    EmptyPackets,
    EmptyProcSamples,
    RunCountMismatch { got: usize, expected: usize },
}

impl fmt::Display for ProfileWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileWarning::EmptyTopSamples => {
                write!(f, "no top samples; memory and cpu averages set to 0")
            }
            ProfileWarning::EmptyPackets => write!(f, "no packets; traffic metrics set to 0"),
            ProfileWarning::EmptyProcSamples => {
                write!(f, "no proc samples; thread and frequency averages set to 0")
            }
            ProfileWarning::RunCountMismatch { got, expected } => {
                write!(f, "aggregating {got} runs, expected {expected}")
            }
        }
    }
}

/// Averages the session's sample lists into a [`CostVector`]. Power is
/// left at 0 until [`estimate_power`] is applied. Empty sample lists zero
/// their metrics and are reported as warnings.
pub fn compute_cost_vector(
    session: &MeasurementSession,
) -> Result<(CostVector, Vec<ProfileWarning>), ProfileError> {
    if !session.duration_s.is_finite() || session.duration_s <= 0.0 {
        return Err(ProfileError::ZeroDuration);
    }
    if session.top_samples.is_empty() && session.packets.is_empty() && session.proc_samples.is_empty()
    {
        return Err(ProfileError::EmptySession);
    }
    let mut warnings = Vec::new();
    let mut cost = CostVector::default();

    if session.top_samples.is_empty() {
        warnings.push(ProfileWarning::EmptyTopSamples);
    } else {
        let n = session.top_samples.len() as f64;
        cost.mem_rss_avg_kb = session.top_samples.iter().map(|s| s.rss_kb).sum::<f64>() / n;
        cost.cpu_util_avg_pct = session.top_samples.iter().map(|s| s.cpu_pct).sum::<f64>() / n;
    }

    if session.proc_samples.is_empty() {
        warnings.push(ProfileWarning::EmptyProcSamples);
    } else {
        let n = session.proc_samples.len() as f64;
        cost.thread_count_avg = session
            .proc_samples
            .iter()
            .map(|s| s.thread_count as f64)
            .sum::<f64>()
            / n;
        cost.avg_cpu_freq_khz = session
            .proc_samples
            .iter()
            .map(|s| s.cpu_freq_khz as f64)
            .sum::<f64>()
            / n;
    }

    if session.packets.is_empty() {
        warnings.push(ProfileWarning::EmptyPackets);
    } else {
        cost.total_bytes = session.packets.iter().map(|p| p.bytes as f64).sum();
        cost.packet_count = session.packets.len() as f64;
    }
    cost.avg_packet_rate_pps = cost.packet_count / session.duration_s;

    Ok((cost, warnings))
}

/// Fills in `power_mw` from the battery model: WiFi draw at the average
/// packet rate plus CPU draw at the average utilization, with the average
/// frequency snapped to the nearest model bin.
pub fn estimate_power(cost: &CostVector, model: &PowerModel) -> Result<CostVector, PowerError> {
    let u = cost.cpu_util_avg_pct / 100.0;
    let power = power::total_power(cost.avg_packet_rate_pps, u, cost.avg_cpu_freq_khz, model)?;
    let mut out = *cost;
    out.power_mw = power;
    Ok(out)
}

/// Per-metric increase rates relative to a prototype baseline. A metric
/// whose baseline is exactly zero has no defined rate and is carried as
/// `None` rather than an infinity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IncreaseRates {
    pub mem_rss_avg_kb: Option<f64>,
    pub cpu_util_avg_pct: Option<f64>,
    pub thread_count_avg: Option<f64>,
    pub total_bytes: Option<f64>,
    pub packet_count: Option<f64>,
    pub avg_packet_rate_pps: Option<f64>,
    pub avg_cpu_freq_khz: Option<f64>,
    pub power_mw: Option<f64>,
}

impl IncreaseRates {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::MemRssAvgKb => self.mem_rss_avg_kb,
            Metric::CpuUtilAvgPct => self.cpu_util_avg_pct,
            Metric::ThreadCountAvg => self.thread_count_avg,
            Metric::TotalBytes => self.total_bytes,
            Metric::PacketCount => self.packet_count,
            Metric::AvgPacketRatePps => self.avg_packet_rate_pps,
            Metric::AvgCpuFreqKhz => self.avg_cpu_freq_khz,
            Metric::PowerMw => self.power_mw,
        }
    }

    fn set(&mut self, metric: Metric, value: Option<f64>) {
        match metric {
            Metric::MemRssAvgKb => self.mem_rss_avg_kb = value,
            Metric::CpuUtilAvgPct => self.cpu_util_avg_pct = value,
            Metric::ThreadCountAvg => self.thread_count_avg = value,
            Metric::TotalBytes => self.total_bytes = value,
            Metric::PacketCount => self.packet_count = value,
            Metric::AvgPacketRatePps => self.avg_packet_rate_pps = value,
            Metric::AvgCpuFreqKhz => self.avg_cpu_freq_khz = value,
            Metric::PowerMw => self.power_mw = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSeparation {
    /// Signed field-wise difference, ad-embedded minus prototype. Negative
    /// deltas are measurement noise worth surfacing and are never clamped.
    pub delta: CostVector,
    pub increase_rates: IncreaseRates,
}

/// Isolates ad-attributable cost by subtracting the prototype app's
/// vector. Total on all valid inputs.
pub fn separate_costs(ad_app: &CostVector, prototype: &CostVector) -> CostSeparation {
    let mut delta = CostVector::default();
    let mut rates = IncreaseRates::default();
    for metric in Metric::ALL {
        let base = prototype.get(metric);
        let diff = ad_app.get(metric) - base;
        delta.set(metric, diff);
        rates.set(metric, if base == 0.0 { None } else { Some(diff / base) });
    }
    CostSeparation {
        delta,
        increase_rates: rates,
    }
}

/// Field-wise mean over repeated runs of the same protocol. Warns (does
/// not fail) when the run count differs from the expected count.
pub fn aggregate_runs(
    runs: &[CostVector],
    n_expected: usize,
) -> Result<(CostVector, Option<ProfileWarning>), ProfileError> {
    if runs.is_empty() {
        return Err(ProfileError::EmptyRunList);
    }
    let n = runs.len() as f64;
    let mut mean = CostVector::default();
    for metric in Metric::ALL {
        mean.set(metric, runs.iter().map(|r| r.get(metric)).sum::<f64>() / n);
    }
    let warning = (runs.len() != n_expected).then_some(ProfileWarning::RunCountMismatch {
        got: runs.len(),
        expected: n_expected,
    });
    Ok((mean, warning))
}

/// Default number of measurement repetitions per scheme.
pub const DEFAULT_RUNS_EXPECTED: usize = 4;

#[derive(Debug)]
pub enum ProfileError {
    ZeroDuration,
    EmptySession,
    EmptyRunList,
    InvalidSession(String),
    LogParse(String, LogParseError),
    Manifest(String, serde_json::Error),
    Io(String, std::io::Error),
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileError::ZeroDuration => write!(f, "session duration must be positive"),
            ProfileError::EmptySession => write!(f, "session has no samples in any list"),
            ProfileError::EmptyRunList => write!(f, "cannot aggregate zero runs"),
            ProfileError::InvalidSession(msg) => write!(f, "invalid session: {msg}"),
            ProfileError::LogParse(file, err) => write!(f, "{file}: {err}"),
            ProfileError::Manifest(file, err) => {
                write!(f, "malformed session manifest {file}: {err}")
            }
            ProfileError::Io(path, err) => write!(f, "cannot read {path}: {err}"),
        }
    }
}

impl std::error::Error for ProfileError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ProfileError::LogParse(_, err) => Some(err),
            ProfileError::Manifest(_, err) => Some(err),
            ProfileError::Io(_, err) => Some(err),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::{CpuPowerBin, WifiPowerParams};

    fn session_with(
        top: Vec<TopSample>,
        packets: Vec<PacketRecord>,
        proc: Vec<ProcSample>,
        duration_s: f64,
    ) -> MeasurementSession {
        MeasurementSession {
            label: "test".into(),
            duration_s,
            top_samples: top,
            packets,
            proc_samples: proc,
        }
    }

    fn top(t: f64, rss: f64, cpu: f64) -> TopSample {
        TopSample { t_s: t, rss_kb: rss, cpu_pct: cpu }
    }

    fn packet(t: f64, direction: Direction, bytes: u64) -> PacketRecord {
        PacketRecord { t_s: t, direction, bytes }
    }

    #[test]
    fn cpu_average_is_arithmetic_mean() {
        let s = session_with(vec![top(0.0, 100.0, 2.0), top(1.0, 100.0, 4.0)], vec![], vec![], 2.0);
        let (cost, warnings) = compute_cost_vector(&s).unwrap();
        assert_eq!(cost.cpu_util_avg_pct, 3.0);
        assert!(warnings.contains(&ProfileWarning::EmptyPackets));
    }

    #[test]
    fn traffic_metrics_come_from_packet_sums() {
        let s = session_with(
            vec![],
            vec![
                packet(0.1, Direction::In, 100),
                packet(0.5, Direction::Out, 50),
                packet(1.5, Direction::In, 50),
            ],
            vec![],
            2.0,
        );
        let (cost, _) = compute_cost_vector(&s).unwrap();
        assert_eq!(cost.total_bytes, 200.0);
        assert_eq!(cost.packet_count, 3.0);
        assert_eq!(cost.avg_packet_rate_pps, 1.5);
        assert_eq!(cost.power_mw, 0.0);
    }

    #[test]
    fn zero_duration_is_rejected() {
        let s = session_with(vec![top(0.0, 1.0, 1.0)], vec![], vec![], 0.0);
        assert!(matches!(compute_cost_vector(&s), Err(ProfileError::ZeroDuration)));
    }

    #[test]
    fn fully_empty_session_is_rejected() {
        let s = session_with(vec![], vec![], vec![], 1.0);
        assert!(matches!(compute_cost_vector(&s), Err(ProfileError::EmptySession)));
    }

    #[test]
    fn validate_rejects_timestamps_past_duration() {
        let s = session_with(vec![top(3.0, 1.0, 1.0)], vec![], vec![], 2.0);
        assert!(matches!(s.validate(), Err(ProfileError::InvalidSession(_))));
    }

    fn test_model() -> PowerModel {
        PowerModel {
            wifi: WifiPowerParams {
                beta_low: 2.0,
                base_low: 10.0,
                beta_high: 5.0,
                base_high: 1.0,
                threshold_pps: 8.0,
            },
            cpu_bins: vec![CpuPowerBin {
                freq_khz: 600_000.0,
                beta_active: 250.0,
                beta_idle: 35.0,
            }],
        }
    }

    #[test]
    fn idle_power_is_sum_of_base_terms() {
        let cost = CostVector {
            avg_cpu_freq_khz: 600_000.0,
            ..CostVector::default()
        };
        let powered = estimate_power(&cost, &test_model()).unwrap();
        assert_eq!(powered.power_mw, 10.0 + 35.0);
    }

    #[test]
    fn power_matches_hand_evaluation() {
        let cost = CostVector {
            cpu_util_avg_pct: 50.0,
            avg_packet_rate_pps: 10.0,
            avg_cpu_freq_khz: 600_000.0,
            ..CostVector::default()
        };
        let powered = estimate_power(&cost, &test_model()).unwrap();
        // 10 pps is above the 8 pps threshold: 5*10 + 1; cpu: 250*0.5 + 35.
        assert_eq!(powered.power_mw, 51.0 + 160.0);
    }

    #[test]
    fn self_separation_is_all_zero() {
        let cost = CostVector {
            mem_rss_avg_kb: 100.0,
            cpu_util_avg_pct: 2.0,
            thread_count_avg: 5.0,
            total_bytes: 1000.0,
            packet_count: 10.0,
            avg_packet_rate_pps: 0.5,
            avg_cpu_freq_khz: 600_000.0,
            power_mw: 50.0,
        };
        let sep = separate_costs(&cost, &cost);
        for metric in Metric::ALL {
            assert_eq!(sep.delta.get(metric), 0.0);
            assert_eq!(sep.increase_rates.get(metric), Some(0.0));
        }
    }

    #[test]
    fn doubled_cpu_yields_full_increase_rate() {
        let proto = CostVector { cpu_util_avg_pct: 2.0, ..CostVector::default() };
        let mut ad = proto;
        ad.cpu_util_avg_pct = 4.0;
        let sep = separate_costs(&ad, &proto);
        assert_eq!(sep.increase_rates.cpu_util_avg_pct, Some(1.0));
        // Baseline zero elsewhere means those rates are undefined.
        assert_eq!(sep.increase_rates.total_bytes, None);
    }

    #[test]
    fn negative_deltas_are_preserved() {
        let proto = CostVector { mem_rss_avg_kb: 100.0, ..CostVector::default() };
        let mut ad = proto;
        ad.mem_rss_avg_kb = 90.0;
        let sep = separate_costs(&ad, &proto);
        assert_eq!(sep.delta.mem_rss_avg_kb, -10.0);
        assert_eq!(sep.increase_rates.mem_rss_avg_kb, Some(-0.1));
    }

    #[test]
    fn aggregate_means_each_field() {
        let runs: Vec<CostVector> = [100.0, 200.0, 300.0, 400.0]
            .iter()
            .map(|&b| CostVector { total_bytes: b, ..CostVector::default() })
            .collect();
        let (mean, warning) = aggregate_runs(&runs, 4).unwrap();
        assert_eq!(mean.total_bytes, 250.0);
        assert!(warning.is_none());
    }

    #[test]
    fn aggregate_warns_on_unexpected_run_count() {
        let runs = vec![CostVector::default(); 3];
        let (_, warning) = aggregate_runs(&runs, 4).unwrap();
        assert_eq!(
            warning,
            Some(ProfileWarning::RunCountMismatch { got: 3, expected: 4 })
        );
        assert!(matches!(
            aggregate_runs(&[], 4),
            Err(ProfileError::EmptyRunList)
        ));
    }

    #[test]
    fn aggregate_of_identical_runs_is_identity() {
        let v = CostVector {
            mem_rss_avg_kb: 7.0,
            power_mw: 3.5,
            ..CostVector::default()
        };
        let (mean, _) = aggregate_runs(&[v, v, v, v], 4).unwrap();
        assert_eq!(mean, v);
    }
}
