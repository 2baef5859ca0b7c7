//! Deterministic measurement-log generator.
//!
//! Produces the canonical top/packet/proc logs plus a manifest and a
//! ground-truth file for a planned session, so the parse → profile →
//! analyze pipeline can be verified end to end without a device. With all
//! noise at zero the recomputed cost vector equals the plan's targets
//! exactly; with noise the plants remain the expected values.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::fsio::atomic_write;
use crate::profiler::{
    compute_cost_vector, write_packet_log, write_proc_log, write_top_log, CostVector, Direction,
    MeasurementSession, PacketRecord, ProcSample, SessionManifest, TopSample,
};

/// Relative (fraction-of-mean) standard deviations applied per metric.
/// Values drawn below physical floors are truncated (rss, bytes at 0;
/// threads at 1; cpu clamped into [0, 100]), so large settings bias the
/// realized mean away from the plant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub rss_rel: f64,
    pub cpu_rel: f64,
    pub threads_rel: f64,
    pub bytes_rel: f64,
}

impl NoiseSpec {
    pub fn is_zero(&self) -> bool {
        self.rss_rel == 0.0 && self.cpu_rel == 0.0 && self.threads_rel == 0.0
            && self.bytes_rel == 0.0
    }

    /// Same relative deviation on every noised metric.
    pub fn uniform(rel: f64) -> Self {
        NoiseSpec {
            rss_rel: rel,
            cpu_rel: rel,
            threads_rel: rel,
            bytes_rel: rel,
        }
    }
}

/// Target values and cadences for one generated session. Intervals have
/// millisecond resolution so emitted timestamps stay exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub label: String,
    pub duration_s: f64,
    /// Interval between simulated user operations; the duration must be a
    /// whole number of operations.
    #[serde(default = "default_op_interval")]
    pub op_interval_s: f64,
    #[serde(default = "default_top_interval")]
    pub top_interval_s: f64,
    #[serde(default = "default_proc_interval")]
    pub proc_interval_s: f64,
    pub rss_mean_kb: f64,
    pub cpu_mean_pct: f64,
    pub thread_count: u32,
    pub cpu_freq_khz: u64,
    pub packet_rate_pps: f64,
    pub bytes_per_packet: u64,
    /// Exponential inter-arrivals instead of evenly spaced packets. The
    /// realized packet count then varies around the plant.
    #[serde(default)]
    pub poisson_packets: bool,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_op_interval() -> f64 {
    20.0
}

fn default_top_interval() -> f64 {
    1.0
}

fn default_proc_interval() -> f64 {
    0.04
}

impl SessionPlan {
    /// A plan with the standard cadences: 20 s between operations, 1 s
    /// top sampling, 0.04 s proc sampling.
    pub fn new(label: impl Into<String>, duration_s: f64) -> Self {
        SessionPlan {
            label: label.into(),
            duration_s,
            op_interval_s: default_op_interval(),
            top_interval_s: default_top_interval(),
            proc_interval_s: default_proc_interval(),
            rss_mean_kb: 50_000.0,
            cpu_mean_pct: 2.0,
            thread_count: 20,
            cpu_freq_khz: 1_200_000,
            packet_rate_pps: 1.0,
            bytes_per_packet: 600,
            poisson_packets: false,
            noise: NoiseSpec::default(),
            seed: 0,
        }
    }

    fn interval_ms(value_s: f64, name: &str) -> Result<u64, SimError> {
        if !value_s.is_finite() || value_s <= 0.0 {
            return Err(SimError::InvalidPlan(format!("{name} must be positive")));
        }
        let ms = value_s * 1000.0;
        if (ms - ms.round()).abs() > 1e-6 || ms.round() < 1.0 {
            return Err(SimError::InvalidPlan(format!(
                "{name} must be a whole number of milliseconds, got {value_s}s"
            )));
        }
        Ok(ms.round() as u64)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let dur_ms = Self::interval_ms(self.duration_s, "duration_s")?;
        let op_ms = Self::interval_ms(self.op_interval_s, "op_interval_s")?;
        Self::interval_ms(self.top_interval_s, "top_interval_s")?;
        Self::interval_ms(self.proc_interval_s, "proc_interval_s")?;
        if dur_ms % op_ms != 0 {
            return Err(SimError::InvalidPlan(format!(
                "duration {}s is not a multiple of the {}s operation interval",
                self.duration_s, self.op_interval_s
            )));
        }
        for (name, v) in [
            ("rss_mean_kb", self.rss_mean_kb),
            ("cpu_mean_pct", self.cpu_mean_pct),
            ("packet_rate_pps", self.packet_rate_pps),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(SimError::InvalidPlan(format!("{name} must be nonnegative")));
            }
        }
        if self.cpu_mean_pct > 100.0 {
            return Err(SimError::InvalidPlan(format!(
                "cpu_mean_pct {} exceeds 100",
                self.cpu_mean_pct
            )));
        }
        if self.thread_count == 0 {
            return Err(SimError::InvalidPlan("thread_count must be at least 1".into()));
        }
        if self.cpu_freq_khz == 0 {
            return Err(SimError::InvalidPlan("cpu_freq_khz must be positive".into()));
        }
        if self.packet_rate_pps > 0.0 && self.bytes_per_packet == 0 {
            return Err(SimError::InvalidPlan("bytes_per_packet must be positive".into()));
        }
        for (name, v) in [
            ("noise.rss_rel", self.noise.rss_rel),
            ("noise.cpu_rel", self.noise.cpu_rel),
            ("noise.threads_rel", self.noise.threads_rel),
            ("noise.bytes_rel", self.noise.bytes_rel),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(SimError::InvalidPlan(format!("{name} must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Planted targets alongside the exact means of what was emitted. With
/// zero noise the two coincide; `power_mw` stays 0 in both (power needs a
/// battery model, which generation does not have).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub expected: CostVector,
    pub realized: CostVector,
}

/// Builds the session in memory. The expected vector reflects achievable
/// plants: the packet count is rounded to a whole number of packets, and
/// in Poisson mode it is the rate times the duration.
pub fn generate_in_memory(plan: &SessionPlan) -> Result<(MeasurementSession, GroundTruth), SimError> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let dur_ms = (plan.duration_s * 1000.0).round() as u64;
    let top_ms = (plan.top_interval_s * 1000.0).round() as u64;
    let proc_ms = (plan.proc_interval_s * 1000.0).round() as u64;

    let gauss = |rng: &mut ChaCha8Rng, mean: f64, rel: f64| -> f64 {
        if rel == 0.0 || mean == 0.0 {
            mean
        } else {
            // Normal::new only fails on a non-finite stddev, which
            // validate() has excluded.
            Normal::new(mean, rel * mean).unwrap().sample(rng)
        }
    };

    let mut top_samples = Vec::new();
    let mut t_ms = 0u64;
    while t_ms < dur_ms {
        let rss = gauss(&mut rng, plan.rss_mean_kb, plan.noise.rss_rel).max(0.0);
        let cpu = gauss(&mut rng, plan.cpu_mean_pct, plan.noise.cpu_rel).clamp(0.0, 100.0);
        top_samples.push(TopSample {
            t_s: t_ms as f64 / 1000.0,
            rss_kb: rss,
            cpu_pct: cpu,
        });
        t_ms += top_ms;
    }

    let mut proc_samples = Vec::new();
    let mut t_ms = 0u64;
    while t_ms < dur_ms {
        let threads = if plan.noise.threads_rel == 0.0 {
            plan.thread_count
        } else {
            let drawn = gauss(&mut rng, plan.thread_count as f64, plan.noise.threads_rel);
            drawn.round().max(1.0) as u32
        };
        proc_samples.push(ProcSample {
            t_s: t_ms as f64 / 1000.0,
            thread_count: threads,
            cpu_freq_khz: plan.cpu_freq_khz,
        });
        t_ms += proc_ms;
    }

    let mut packets = Vec::new();
    let mut expected_count = 0u64;
    if plan.packet_rate_pps > 0.0 {
        let times: Vec<f64> = if plan.poisson_packets {
            expected_count = (plan.packet_rate_pps * plan.duration_s).round() as u64;
            let mut times = Vec::new();
            let mut t = 0.0;
            loop {
                // Exponential inter-arrival via inverse transform.
                let u: f64 = rng.random();
                t += -(1.0 - u).ln() / plan.packet_rate_pps;
                if t >= plan.duration_s {
                    break;
                }
                times.push(t);
            }
            times
        } else {
            // Evenly spaced slot centers with bounded jitter: the rate
            // plant holds exactly and order is preserved.
            let count = (plan.packet_rate_pps * plan.duration_s).round() as u64;
            expected_count = count;
            let slot = plan.duration_s / count.max(1) as f64;
            (0..count)
                .map(|i| {
                    let jitter: f64 = rng.random_range(-0.25..0.25);
                    (i as f64 + 0.5 + jitter) * slot
                })
                .collect()
        };
        for (i, t) in times.iter().enumerate() {
            let bytes = if plan.noise.bytes_rel == 0.0 {
                plan.bytes_per_packet
            } else {
                gauss(&mut rng, plan.bytes_per_packet as f64, plan.noise.bytes_rel)
                    .round()
                    .max(1.0) as u64
            };
            packets.push(PacketRecord {
                t_s: *t,
                direction: if i % 2 == 0 { Direction::In } else { Direction::Out },
                bytes,
            });
        }
    }

    let session = MeasurementSession {
        label: plan.label.clone(),
        duration_s: plan.duration_s,
        top_samples,
        packets,
        proc_samples,
    };
    session.validate().map_err(|e| SimError::Internal(e.to_string()))?;

    let expected = CostVector {
        mem_rss_avg_kb: plan.rss_mean_kb,
        cpu_util_avg_pct: plan.cpu_mean_pct,
        thread_count_avg: plan.thread_count as f64,
        total_bytes: (expected_count * plan.bytes_per_packet) as f64,
        packet_count: expected_count as f64,
        avg_packet_rate_pps: expected_count as f64 / plan.duration_s,
        avg_cpu_freq_khz: plan.cpu_freq_khz as f64,
        power_mw: 0.0,
    };
    let (realized, _) = compute_cost_vector(&session).map_err(|e| SimError::Internal(e.to_string()))?;
    Ok((session, GroundTruth { expected, realized }))
}

/// Paths of one generated session on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSession {
    pub manifest_path: PathBuf,
    pub ground_truth_path: PathBuf,
    pub ground_truth: GroundTruth,
}

const TOP_LOG_PID: u32 = 1000;

/// Generates a session and writes the three canonical logs, the session
/// manifest, and `<label>.ground_truth.json` into `out_dir`.
pub fn generate_session(plan: &SessionPlan, out_dir: &Path) -> Result<GeneratedSession, SimError> {
    let (session, truth) = generate_in_memory(plan)?;

    let file = |suffix: &str| out_dir.join(format!("{}.{suffix}", plan.label));
    let write = |path: &Path, contents: &str| -> Result<(), SimError> {
        atomic_write(path, contents.as_bytes())
            .map_err(|e| SimError::Io(path.display().to_string(), e))
    };

    write(&file("top.csv"), &write_top_log(&session.top_samples, TOP_LOG_PID))?;
    write(&file("packets.csv"), &write_packet_log(&session.packets))?;
    write(&file("proc.csv"), &write_proc_log(&session.proc_samples))?;

    let manifest = SessionManifest {
        label: plan.label.clone(),
        duration_s: plan.duration_s,
        top_log: format!("{}.top.csv", plan.label),
        packet_log: format!("{}.packets.csv", plan.label),
        proc_log: format!("{}.proc.csv", plan.label),
    };
    let manifest_path = file("manifest.json");
    write(
        &manifest_path,
        &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"),
    )?;

    let ground_truth_path = file("ground_truth.json");
    write(
        &ground_truth_path,
        &(serde_json::to_string_pretty(&truth).expect("ground truth serializes") + "\n"),
    )?;

    Ok(GeneratedSession {
        manifest_path,
        ground_truth_path,
        ground_truth: truth,
    })
}

#[derive(Debug)]
pub enum SimError {
    InvalidPlan(String),
    Io(String, std::io::Error),
    Internal(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidPlan(msg) => write!(f, "invalid session plan: {msg}"),
            SimError::Io(path, err) => write!(f, "cannot write {path}: {err}"),
            SimError::Internal(msg) => write!(f, "generated session failed validation: {msg}"),
        }
    }
}

impl std::error::Error for SimError {}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn noiseless_plants_are_recovered_exactly() {
        let mut plan = SessionPlan::new("p", 80.0);
        plan.cpu_mean_pct = 3.0;
        plan.rss_mean_kb = 51_200.0;
        plan.packet_rate_pps = 2.0;
        let (session, truth) = generate_in_memory(&plan).unwrap();
        let (cost, _) = compute_cost_vector(&session).unwrap();
        assert_eq!(cost.cpu_util_avg_pct, 3.0);
        assert_eq!(cost, truth.realized);
        assert_eq!(truth.expected, truth.realized);
    }

    #[test]
    fn four_ops_give_eighty_top_samples() {
        let plan = SessionPlan::new("p", 80.0);
        let (session, _) = generate_in_memory(&plan).unwrap();
        assert_eq!(session.top_samples.len(), 80);
        assert_eq!(session.proc_samples.len(), 2000);
    }

    #[test]
    fn same_seed_gives_byte_identical_logs() {
        let mut plan = SessionPlan::new("p", 40.0);
        plan.noise = NoiseSpec::uniform(0.05);
        plan.seed = 7;
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        generate_session(&plan, &a).unwrap();
        generate_session(&plan, &b).unwrap();
        for name in ["p.top.csv", "p.packets.csv", "p.proc.csv", "p.manifest.json"] {
            assert_eq!(
                fs::read(a.join(name)).unwrap(),
                fs::read(b.join(name)).unwrap(),
                "{name} differs between identically seeded runs"
            );
        }
    }

    #[test]
    fn different_seed_changes_noisy_logs() {
        let mut plan = SessionPlan::new("p", 40.0);
        plan.noise = NoiseSpec::uniform(0.05);
        plan.seed = 1;
        let (a, _) = generate_in_memory(&plan).unwrap();
        plan.seed = 2;
        let (b, _) = generate_in_memory(&plan).unwrap();
        assert_ne!(a.top_samples, b.top_samples);
    }

    #[test]
    fn rejects_duration_not_multiple_of_op_interval() {
        let plan = SessionPlan::new("p", 70.0);
        assert!(matches!(
            generate_in_memory(&plan),
            Err(SimError::InvalidPlan(_))
        ));
    }

    #[test]
    fn rejects_negative_noise() {
        let mut plan = SessionPlan::new("p", 20.0);
        plan.noise.cpu_rel = -0.1;
        assert!(matches!(plan.validate(), Err(SimError::InvalidPlan(_))));
    }

    #[test]
    fn written_session_parses_back_to_ground_truth() {
        let mut plan = SessionPlan::new("run0", 40.0);
        plan.packet_rate_pps = 3.0;
        plan.bytes_per_packet = 700;
        let dir = tempfile::tempdir().unwrap();
        let generated = generate_session(&plan, dir.path()).unwrap();
        let session = crate::profiler::load_session(&generated.manifest_path).unwrap();
        let (cost, _) = compute_cost_vector(&session).unwrap();
        assert_eq!(cost, generated.ground_truth.realized);
        assert_eq!(cost.total_bytes, 120.0 * 700.0);
    }

    #[test]
    fn poisson_mode_is_deterministic_and_valid() {
        let mut plan = SessionPlan::new("p", 40.0);
        plan.poisson_packets = true;
        plan.packet_rate_pps = 5.0;
        plan.seed = 11;
        let (a, truth_a) = generate_in_memory(&plan).unwrap();
        let (b, _) = generate_in_memory(&plan).unwrap();
        assert_eq!(a.packets, b.packets);
        assert_eq!(truth_a.expected.packet_count, 200.0);
        assert!(a.packets.iter().all(|p| p.t_s < 40.0));
    }

    #[test]
    fn noisy_means_stay_near_plants() {
        let mut plan = SessionPlan::new("p", 80.0);
        plan.cpu_mean_pct = 10.0;
        plan.noise = NoiseSpec::uniform(0.05);
        plan.seed = 3;
        let (_, truth) = generate_in_memory(&plan).unwrap();
        let rel = (truth.realized.cpu_util_avg_pct - 10.0).abs() / 10.0;
        assert!(rel < 0.05, "cpu mean drifted {rel} from plant");
    }
}
