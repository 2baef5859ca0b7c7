//! Canonical measurement log formats.
//!
//! Three line-oriented CSV logs make up one session:
//!
//! - top log: `t_s,pid,rss_kb,cpu_pct` (one second cadence by convention)
//! - packet log: `t_s,direction(in|out),bytes`
//! - proc log: `t_s,thread_count,cpu_freq_khz`
//!
//! A JSON manifest names the three files together with the session label
//! and duration. Raw `top`/`tcpdump` output varies across Android builds,
//! so conversion into these formats happens outside this crate; the
//! formats here are the contract.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Direction, MeasurementSession, PacketRecord, ProcSample, ProfileError, TopSample};

#[derive(Debug, Clone, PartialEq)]
pub enum LogParseError {
    MalformedLine { line: usize, reason: String },
    NonMonotonicTimestamp { line: usize },
}

impl std::fmt::Display for LogParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LogParseError::MalformedLine { line, reason } => {
                write!(f, "malformed line {line}: {reason}")
            }
            LogParseError::NonMonotonicTimestamp { line } => {
                write!(f, "timestamp on line {line} goes backwards")
            }
        }
    }
}

impl std::error::Error for LogParseError {}

fn malformed(line: usize, reason: impl Into<String>) -> LogParseError {
    LogParseError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn parse_time(field: &str, line: usize) -> Result<f64, LogParseError> {
    let t: f64 = field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("bad timestamp {field:?}")))?;
    if !t.is_finite() || t < 0.0 {
        return Err(malformed(line, format!("timestamp {t} out of range")));
    }
    Ok(t)
}

/// Iterates `input` line by line, skipping blank lines, enforcing
/// nondecreasing timestamps, and delegating field parsing to `row`.
fn parse_lines<T>(
    input: &str,
    fields: usize,
    mut row: impl FnMut(&[&str], usize) -> Result<(T, f64), LogParseError>,
) -> Result<Vec<T>, LogParseError> {
    let mut out = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != fields {
            return Err(malformed(
                line_no,
                format!("expected {fields} fields, got {}", cols.len()),
            ));
        }
        let (value, t) = row(&cols, line_no)?;
        if t < last_t {
            return Err(LogParseError::NonMonotonicTimestamp { line: line_no });
        }
        last_t = t;
        out.push(value);
    }
    Ok(out)
}

/// Parses a top log. When `pid_filter` is set, rows for other pids are
/// parsed (and time-checked) but dropped from the result.
pub fn parse_top_log(
    input: &str,
    pid_filter: Option<u32>,
) -> Result<Vec<TopSample>, LogParseError> {
    let rows = parse_lines(input, 4, |cols, line| {
        let t = parse_time(cols[0], line)?;
        let pid: u32 = cols[1]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad pid {:?}", cols[1])))?;
        let rss_kb: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad rss_kb {:?}", cols[2])))?;
        if !rss_kb.is_finite() || rss_kb < 0.0 {
            return Err(malformed(line, format!("rss_kb {rss_kb} out of range")));
        }
        let cpu_pct: f64 = cols[3]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad cpu_pct {:?}", cols[3])))?;
        if !cpu_pct.is_finite() || !(0.0..=100.0).contains(&cpu_pct) {
            return Err(malformed(line, format!("cpu_pct {cpu_pct} out of [0, 100]")));
        }
        Ok(((pid, TopSample { t_s: t, rss_kb, cpu_pct }), t))
    })?;
    Ok(rows
        .into_iter()
        .filter(|(pid, _)| pid_filter.is_none_or(|want| *pid == want))
        .map(|(_, sample)| sample)
        .collect())
}

pub fn parse_packet_log(input: &str) -> Result<Vec<PacketRecord>, LogParseError> {
    parse_lines(input, 3, |cols, line| {
        let t = parse_time(cols[0], line)?;
        let direction = match cols[1].trim().to_ascii_lowercase().as_str() {
            "in" => Direction::In,
            "out" => Direction::Out,
            other => {
                return Err(malformed(line, format!("bad direction {other:?}")));
            }
        };
        let bytes: u64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad bytes {:?}", cols[2])))?;
        if bytes == 0 {
            return Err(malformed(line, "packet bytes must be positive"));
        }
        Ok((PacketRecord { t_s: t, direction, bytes }, t))
    })
}

pub fn parse_proc_log(input: &str) -> Result<Vec<ProcSample>, LogParseError> {
    parse_lines(input, 3, |cols, line| {
        let t = parse_time(cols[0], line)?;
        let thread_count: u32 = cols[1]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad thread_count {:?}", cols[1])))?;
        if thread_count == 0 {
            return Err(malformed(line, "thread_count must be at least 1"));
        }
        let cpu_freq_khz: u64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad cpu_freq_khz {:?}", cols[2])))?;
        if cpu_freq_khz == 0 {
            return Err(malformed(line, "cpu_freq_khz must be positive"));
        }
        Ok((
            ProcSample {
                t_s: t,
                thread_count,
                cpu_freq_khz,
            },
            t,
        ))
    })
}

pub fn write_top_log(samples: &[TopSample], pid: u32) -> String {
    let mut out = String::new();
    for s in samples {
        writeln!(out, "{},{},{},{}", s.t_s, pid, s.rss_kb, s.cpu_pct).unwrap();
    }
    out
}

pub fn write_packet_log(packets: &[PacketRecord]) -> String {
    let mut out = String::new();
    for p in packets {
        let dir = match p.direction {
            Direction::In => "in",
            Direction::Out => "out",
        };
        writeln!(out, "{},{},{}", p.t_s, dir, p.bytes).unwrap();
    }
    out
}

pub fn write_proc_log(samples: &[ProcSample]) -> String {
    let mut out = String::new();
    for s in samples {
        writeln!(out, "{},{},{}", s.t_s, s.thread_count, s.cpu_freq_khz).unwrap();
    }
    out
}

/// Names the three log files of one session. Log paths are resolved
/// relative to the manifest's own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub label: String,
    pub duration_s: f64,
    pub top_log: String,
    pub packet_log: String,
    pub proc_log: String,
}

/// Loads and validates a full session from a manifest file.
pub fn load_session(manifest_path: &Path) -> Result<MeasurementSession, ProfileError> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| ProfileError::Io(manifest_path.display().to_string(), e))?;
    let manifest: SessionManifest = serde_json::from_str(&text)
        .map_err(|e| ProfileError::Manifest(manifest_path.display().to_string(), e))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let read = |rel: &str| -> Result<String, ProfileError> {
        let path = base.join(rel);
        fs::read_to_string(&path).map_err(|e| ProfileError::Io(path.display().to_string(), e))
    };
    let in_file = |name: &str, err: LogParseError| ProfileError::LogParse(name.to_string(), err);

    let session = MeasurementSession {
        label: manifest.label.clone(),
        duration_s: manifest.duration_s,
        top_samples: parse_top_log(&read(&manifest.top_log)?, None)
            .map_err(|e| in_file(&manifest.top_log, e))?,
        packets: parse_packet_log(&read(&manifest.packet_log)?)
            .map_err(|e| in_file(&manifest.packet_log, e))?,
        proc_samples: parse_proc_log(&read(&manifest.proc_log)?)
            .map_err(|e| in_file(&manifest.proc_log, e))?,
    };
    session.validate()?;
    Ok(session)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_top_line_fields() {
        let samples = parse_top_log("1,1234,51200,2.5\n", None).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].t_s, 1.0);
        assert_eq!(samples[0].rss_kb, 51200.0);
        assert_eq!(samples[0].cpu_pct, 2.5);
    }

    #[test]
    fn empty_stream_yields_empty_list() {
        assert!(parse_top_log("", None).unwrap().is_empty());
        assert!(parse_packet_log("").unwrap().is_empty());
        assert!(parse_proc_log("").unwrap().is_empty());
    }

    #[test]
    fn rejects_backwards_timestamps_with_line_number() {
        let err = parse_top_log("3,1,100,1.0\n2,1,100,1.0\n", None).unwrap_err();
        assert_eq!(err, LogParseError::NonMonotonicTimestamp { line: 2 });
    }

    #[test]
    fn pid_filter_drops_other_processes() {
        let log = "1,10,100,1.0\n1,20,900,9.0\n2,10,110,1.5\n";
        let samples = parse_top_log(log, Some(10)).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[1].rss_kb, 110.0);
    }

    #[test]
    fn parses_packet_directions() {
        let packets = parse_packet_log("0.50,in,1500\n0.75,OUT,64\n").unwrap();
        assert_eq!(packets[0].t_s, 0.5);
        assert_eq!(packets[0].direction, Direction::In);
        assert_eq!(packets[0].bytes, 1500);
        assert_eq!(packets[1].direction, Direction::Out);
    }

    #[test]
    fn rejects_unknown_direction_token() {
        let err = parse_packet_log("0.50,sideways,10\n").unwrap_err();
        assert!(matches!(err, LogParseError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn rejects_zero_byte_packets_and_cpu_overflow() {
        assert!(parse_packet_log("1,in,0\n").is_err());
        assert!(parse_top_log("1,1,100,101.0\n", None).is_err());
    }

    #[test]
    fn packet_fixture_total_matches_column_sum() {
        let lines: Vec<String> = (0..10)
            .map(|i| format!("{}.5,{},{}", i, if i % 2 == 0 { "in" } else { "out" }, 100 + i))
            .collect();
        let log = lines.join("\n");
        // Oracle: sum the third column directly off the text.
        let expected: u64 = log
            .lines()
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        let packets = parse_packet_log(&log).unwrap();
        let total: u64 = packets.iter().map(|p| p.bytes).sum();
        assert_eq!(total, expected);
        assert_eq!(total, 1045);
    }

    #[test]
    fn proc_log_round_trips() {
        let text = "0,5,300000\n0.04,6,600000\n";
        let samples = parse_proc_log(text).unwrap();
        assert_eq!(write_proc_log(&samples), text);
    }
}
