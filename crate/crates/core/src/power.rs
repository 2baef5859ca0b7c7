//! Battery model and coefficient fitting.
//!
//! Power draw is split into two additive components: a piecewise-linear
//! WiFi term driven by the packet rate, and a per-frequency linear CPU
//! term driven by utilization. Coefficients are never hardcoded; they are
//! loaded from a JSON config (units: mW and packets/second) or fitted
//! from calibration samples with ordinary least squares.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// WiFi coefficients in mW. `threshold_pps` selects which linear segment
/// applies; the boundary rate itself belongs to the low segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WifiPowerParams {
    /// mW per packet/second below the threshold.
    pub beta_low: f64,
    /// Base draw in mW below the threshold.
    pub base_low: f64,
    /// mW per packet/second above the threshold.
    pub beta_high: f64,
    /// Base draw in mW above the threshold.
    pub base_high: f64,
    /// Packet-rate threshold in packets/second.
    pub threshold_pps: f64,
}

impl WifiPowerParams {
    pub fn validate(&self) -> Result<(), PowerError> {
        for (name, v) in [
            ("beta_low", self.beta_low),
            ("base_low", self.base_low),
            ("beta_high", self.beta_high),
            ("base_high", self.base_high),
            ("threshold_pps", self.threshold_pps),
        ] {
            if !v.is_finite() {
                return Err(PowerError::InvalidModel(format!("{name} is not finite")));
            }
        }
        if self.threshold_pps <= 0.0 {
            return Err(PowerError::InvalidModel(format!(
                "threshold_pps must be positive, got {}",
                self.threshold_pps
            )));
        }
        Ok(())
    }
}

/// CPU coefficients for one frequency step: active draw scales with
/// utilization, idle draw is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpuPowerBin {
    pub freq_khz: f64,
    /// mW per unit utilization (u in [0, 1]).
    pub beta_active: f64,
    /// mW drawn at zero utilization.
    pub beta_idle: f64,
}

/// The full battery model: WiFi segment parameters plus one CPU bin per
/// supported frequency, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub wifi: WifiPowerParams,
    pub cpu_bins: Vec<CpuPowerBin>,
}

impl PowerModel {
    pub fn from_json(text: &str) -> Result<Self, PowerError> {
        let model: PowerModel = serde_json::from_str(text).map_err(PowerError::Parse)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, PowerError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PowerError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), PowerError> {
        self.wifi.validate()?;
        if self.cpu_bins.is_empty() {
            return Err(PowerError::NoFrequencyBin);
        }
        for bin in &self.cpu_bins {
            if !bin.freq_khz.is_finite() || bin.freq_khz <= 0.0 {
                return Err(PowerError::InvalidModel(format!(
                    "cpu bin frequency must be positive, got {}",
                    bin.freq_khz
                )));
            }
            if !bin.beta_active.is_finite() || !bin.beta_idle.is_finite() {
                return Err(PowerError::InvalidModel(
                    "cpu bin coefficients must be finite".into(),
                ));
            }
        }
        for pair in self.cpu_bins.windows(2) {
            if pair[1].freq_khz <= pair[0].freq_khz {
                return Err(PowerError::InvalidModel(format!(
                    "cpu bin frequencies must be strictly increasing ({} then {})",
                    pair[0].freq_khz, pair[1].freq_khz
                )));
            }
        }
        Ok(())
    }

    /// Chooses the bin whose frequency is closest to `freq_khz`; a tie
    /// between two neighbors goes to the lower frequency.
    pub fn nearest_bin(&self, freq_khz: f64) -> Result<&CpuPowerBin, PowerError> {
        self.cpu_bins
            .iter()
            .min_by(|a, b| {
                let da = (a.freq_khz - freq_khz).abs();
                let db = (b.freq_khz - freq_khz).abs();
                da.partial_cmp(&db)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(
                        a.freq_khz
                            .partial_cmp(&b.freq_khz)
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
            })
            .ok_or(PowerError::NoFrequencyBin)
    }
}

/// WiFi draw in mW for a packet rate `p` in packets/second.
pub fn wifi_power(p: f64, params: &WifiPowerParams) -> Result<f64, PowerError> {
    if p < 0.0 || !p.is_finite() {
        return Err(PowerError::NegativeRate(p));
    }
    if p <= params.threshold_pps {
        Ok(params.beta_low * p + params.base_low)
    } else {
        Ok(params.beta_high * p + params.base_high)
    }
}

/// CPU draw in mW for utilization `u` in [0, 1] at the nearest modeled
/// frequency to `freq_khz`.
pub fn cpu_power(u: f64, freq_khz: f64, model: &PowerModel) -> Result<f64, PowerError> {
    if !(0.0..=1.0).contains(&u) || !u.is_finite() {
        return Err(PowerError::UtilizationOutOfRange(u));
    }
    let bin = model.nearest_bin(freq_khz)?;
    Ok(bin.beta_active * u + bin.beta_idle)
}

/// Combined draw: WiFi plus CPU, by addition.
pub fn total_power(p: f64, u: f64, freq_khz: f64, model: &PowerModel) -> Result<f64, PowerError> {
    Ok(wifi_power(p, &model.wifi)? + cpu_power(u, freq_khz, model)?)
}

/// One calibration observation: predictor (packet rate or utilization)
/// against measured power in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub x: f64,
    pub y: f64,
}

/// Result of a univariate ordinary least squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sample standard deviation (n-1 denominator) of the residuals.
    pub residual_stdev: f64,
}

/// Ordinary least squares over calibration samples. Requires at least two
/// samples and a non-constant predictor.
pub fn fit_linear(samples: &[CalibrationSample]) -> Result<LinearFit, PowerError> {
    if samples.len() < 2 {
        return Err(PowerError::DegenerateDesign(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean_x = samples.iter().map(|s| s.x).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.y).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(PowerError::DegenerateDesign("constant predictor".into()));
    }
    let sxy: f64 = samples
        .iter()
        .map(|s| (s.x - mean_x) * (s.y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    // Residuals of an OLS fit with intercept have mean zero, so the sample
    // variance reduces to the residual sum of squares over n-1.
    let rss: f64 = samples
        .iter()
        .map(|s| (s.y - (slope * s.x + intercept)).powi(2))
        .sum();
    let residual_stdev = (rss / (n - 1.0)).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        residual_stdev,
    })
}

#[derive(Debug)]
pub enum PowerError {
    NegativeRate(f64),
    UtilizationOutOfRange(f64),
    NoFrequencyBin,
    DegenerateDesign(String),
    InvalidModel(String),
    Io(String, std::io::Error),
    Parse(serde_json::Error),
}

impl fmt::Display for PowerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerError::NegativeRate(p) => write!(f, "packet rate must be nonnegative, got {p}"),
            PowerError::UtilizationOutOfRange(u) => {
                write!(f, "cpu utilization must be in [0, 1], got {u}")
            }
            PowerError::NoFrequencyBin => write!(f, "power model has no cpu frequency bins"),
            PowerError::DegenerateDesign(msg) => write!(f, "degenerate regression design: {msg}"),
            PowerError::InvalidModel(msg) => write!(f, "invalid power model: {msg}"),
            PowerError::Io(path, err) => write!(f, "cannot read power model {path}: {err}"),
            PowerError::Parse(err) => write!(f, "malformed power model config: {err}"),
        }
    }
}

impl std::error::Error for PowerError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            PowerError::Io(_, err) => Some(err),
            PowerError::Parse(err) => Some(err),
            _ => None,
        }
    }
}
