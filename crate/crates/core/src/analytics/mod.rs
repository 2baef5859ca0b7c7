//! Revenue quantities, summary statistics, and cost–perception
//! correlation.

pub mod report;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::reviews::CostType;

/// Inputs to the ad revenue model: raw serving counts plus audience
/// shape (daily sessions, minutes per session, impressions per minute).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueInputs {
    pub impressions: f64,
    pub ad_requests: f64,
    pub total_earnings: f64,
    pub n_user: f64,
    pub n_min: f64,
    pub n_ad: f64,
}

impl RevenueInputs {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        for (name, v) in [
            ("impressions", self.impressions),
            ("ad_requests", self.ad_requests),
            ("total_earnings", self.total_earnings),
            ("n_user", self.n_user),
            ("n_min", self.n_min),
            ("n_ad", self.n_ad),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(AnalyticsError::InvalidInput(format!(
                    "{name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Served impressions over requested impressions.
pub fn fill_rate(inputs: &RevenueInputs) -> Result<f64, AnalyticsError> {
    inputs.validate()?;
    if inputs.ad_requests == 0.0 {
        return Err(AnalyticsError::ZeroRequests);
    }
    Ok(inputs.impressions / inputs.ad_requests)
}

/// Earnings per thousand impressions.
pub fn ecpm(inputs: &RevenueInputs) -> Result<f64, AnalyticsError> {
    inputs.validate()?;
    if inputs.impressions == 0.0 {
        return Err(AnalyticsError::ZeroImpressions);
    }
    Ok(inputs.total_earnings / inputs.impressions * 1000.0)
}

/// Total revenue: daily impression volume (sessions x minutes x
/// impressions per minute, in thousands) times eCPM times fill rate.
pub fn ad_revenue(inputs: &RevenueInputs, ecpm_value: f64, fill_rate_value: f64) -> f64 {
    inputs.n_user * inputs.n_min * inputs.n_ad / 1000.0 * ecpm_value * fill_rate_value
}

/// A mobile data plan: price per billing period and the byte quota it
/// buys. A "GB" on a plan is interpreted as 1024^3 bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPlan {
    pub price: f64,
    pub quota_bytes: f64,
}

pub const BYTES_PER_GB: f64 = 1024.0 * 1024.0 * 1024.0;

impl DataPlan {
    pub fn from_gb(price: f64, gb: f64) -> Self {
        DataPlan {
            price,
            quota_bytes: gb * BYTES_PER_GB,
        }
    }
}

/// What the user pays for `bytes_per_session` of ad traffic under the
/// plan's per-byte price.
pub fn traffic_dollar_cost(bytes_per_session: f64, plan: &DataPlan) -> f64 {
    bytes_per_session / plan.quota_bytes * plan.price
}

/// Banker's rounding to `decimals` places, applied at presentation time
/// only; intermediate values stay unrounded.
pub fn round_half_even(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round_ties_even() / scale
}

/// Sample Pearson correlation coefficient, clamped into [-1, 1] against
/// floating-point overshoot. Both series need at least two values and
/// some variation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(AnalyticsError::TooFewPoints { n: x.len() });
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::ConstantSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample standard deviation (n-1 denominator).
pub fn sample_stdev(values: &[f64]) -> Result<f64, AnalyticsError> {
    if values.len() < 2 {
        return Err(AnalyticsError::TooFewPoints { n: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((ss / (n - 1.0)).sqrt())
}

/// Spread of the per-scheme values of each metric: the standard
/// deviation summary that says which cost type varies most across
/// schemes. Every metric needs at least two scheme values.
pub fn scheme_stdev_summary(
    per_metric: &BTreeMap<String, Vec<f64>>,
) -> Result<BTreeMap<String, f64>, AnalyticsError> {
    let mut out = BTreeMap::new();
    for (metric, values) in per_metric {
        if values.len() < 2 {
            return Err(AnalyticsError::TooFewSchemes {
                metric: metric.clone(),
                n: values.len(),
            });
        }
        out.insert(metric.clone(), sample_stdev(values)?);
    }
    Ok(out)
}

/// One scheme's measured cost per cost type joined with its average
/// review rating per cost type. Either side may be partial; correlation
/// uses the cells where both are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeObservation {
    pub scheme_id: String,
    pub measured: BTreeMap<CostType, f64>,
    pub avg_rating: BTreeMap<CostType, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorrelationWarning {
    /// Fewer than two schemes had both a measurement and a rating for
    /// this cost type; no coefficient was computed.
    InsufficientPairs { cost_type: CostType, pairs: usize },
}

impl fmt::Display for CorrelationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrelationWarning::InsufficientPairs { cost_type, pairs } => write!(
                f,
                "{cost_type}: only {pairs} scheme(s) with both measurement and rating"
            ),
        }
    }
}

/// Pearson correlation between measured cost and average rating across
/// schemes, per cost type. Cost types without enough joined pairs are
/// skipped with a warning; degenerate series surface as errors.
pub fn correlate_costs_vs_ratings(
    observations: &[SchemeObservation],
) -> Result<(BTreeMap<CostType, f64>, Vec<CorrelationWarning>), AnalyticsError> {
    let mut coefficients = BTreeMap::new();
    let mut warnings = Vec::new();
    for cost_type in CostType::ALL {
        let pairs: Vec<(f64, f64)> = observations
            .iter()
            .filter_map(|obs| {
                match (obs.measured.get(&cost_type), obs.avg_rating.get(&cost_type)) {
                    (Some(m), Some(r)) => Some((*m, *r)),
                    _ => None,
                }
            })
            .collect();
        if pairs.len() < 2 {
            warnings.push(CorrelationWarning::InsufficientPairs {
                cost_type,
                pairs: pairs.len(),
            });
            continue;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        coefficients.insert(cost_type, pearson(&xs, &ys)?);
    }
    Ok((coefficients, warnings))
}

#[derive(Debug)]
pub enum AnalyticsError {
    ZeroRequests,
    ZeroImpressions,
    LengthMismatch { x: usize, y: usize },
    ConstantSeries,
    TooFewPoints { n: usize },
    TooFewSchemes { metric: String, n: usize },
    InvalidInput(String),
}

impl fmt::Display for AnalyticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticsError::ZeroRequests => write!(f, "fill rate needs at least one ad request"),
            AnalyticsError::ZeroImpressions => write!(f, "eCPM needs at least one impression"),
            AnalyticsError::LengthMismatch { x, y } => {
                write!(f, "series lengths differ: {x} vs {y}")
            }
            AnalyticsError::ConstantSeries => {
                write!(f, "correlation is undefined for a constant series")
            }
            AnalyticsError::TooFewPoints { n } => {
                write!(f, "need at least 2 values, got {n}")
            }
            AnalyticsError::TooFewSchemes { metric, n } => {
                write!(f, "metric {metric} has {n} scheme value(s), need at least 2")
            }
            AnalyticsError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl std::error::Error for AnalyticsError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> RevenueInputs {
        RevenueInputs {
            impressions: 50.0,
            ad_requests: 200.0,
            total_earnings: 2.5,
            n_user: 1000.0,
            n_min: 10.0,
            n_ad: 2.0,
        }
    }

    #[test]
    fn fill_rate_is_impressions_over_requests() {
        let mut i = inputs();
        assert_eq!(fill_rate(&i).unwrap(), 0.25);
        i.impressions = i.ad_requests;
        assert_eq!(fill_rate(&i).unwrap(), 1.0);
        i.impressions = 0.0;
        assert_eq!(fill_rate(&i).unwrap(), 0.0);
        i.ad_requests = 0.0;
        assert!(matches!(fill_rate(&i), Err(AnalyticsError::ZeroRequests)));
    }

    #[test]
    fn ecpm_scales_earnings_per_thousand() {
        let mut i = inputs();
        i.impressions = 1000.0;
        i.total_earnings = 1.0;
        assert_eq!(ecpm(&i).unwrap(), 1.0);
        i.impressions = 500.0;
        i.total_earnings = 2.5;
        assert_eq!(ecpm(&i).unwrap(), 5.0);
        i.total_earnings = 0.0;
        assert_eq!(ecpm(&i).unwrap(), 0.0);
        i.impressions = 0.0;
        assert!(matches!(ecpm(&i), Err(AnalyticsError::ZeroImpressions)));
    }

    #[test]
    fn revenue_matches_direct_evaluation() {
        let i = inputs();
        // 1000 * 10 * 2 / 1000 * 1.0 * 0.5
        assert_eq!(ad_revenue(&i, 1.0, 0.5), 10.0);
        assert_eq!(ad_revenue(&i, 1.0, 0.0), 0.0);
    }

    #[test]
    fn revenue_is_linear_in_each_factor() {
        let i = inputs();
        let base = ad_revenue(&i, 2.0, 0.5);
        let mut doubled = i;
        doubled.n_user *= 2.0;
        assert_eq!(ad_revenue(&doubled, 2.0, 0.5), 2.0 * base);
        assert_eq!(ad_revenue(&i, 4.0, 0.5), 2.0 * base);
    }

    #[test]
    fn traffic_cost_reproduces_reference_plan_figure() {
        let plan = DataPlan::from_gb(25.0, 5.0);
        let cost = traffic_dollar_cost(896_926.0, &plan);
        assert_eq!(round_half_even(cost, 4), 0.0042);
        assert_eq!(traffic_dollar_cost(0.0, &plan), 0.0);
        assert_eq!(traffic_dollar_cost(plan.quota_bytes, &plan), plan.price);
    }

    #[test]
    fn half_even_rounding_breaks_ties_to_even() {
        // Tie cases on exactly representable values.
        assert_eq!(round_half_even(2.5, 0), 2.0);
        assert_eq!(round_half_even(3.5, 0), 4.0);
        assert_eq!(round_half_even(0.125, 2), 0.12);
        assert_eq!(round_half_even(0.375, 2), 0.38);
    }

    #[test]
    fn pearson_handles_the_exact_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y_same = x;
        assert_eq!(pearson(&x, &y_same).unwrap(), 1.0);
        let y_neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &y_neg).unwrap(), -1.0);
    }

    #[test]
    fn pearson_matches_textbook_formula() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 1.0, 4.0, 3.0];
        // Hand computation: covariance 3.0, each sum of squares 5.0.
        assert!((pearson(&x, &y).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn pearson_rejects_degenerate_series() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(AnalyticsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson(&[1.0], &[1.0]),
            Err(AnalyticsError::TooFewPoints { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(AnalyticsError::ConstantSeries)
        ));
    }

    #[test]
    fn stdev_of_equal_values_is_zero() {
        assert_eq!(sample_stdev(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn stdev_matches_hand_computation_on_cpu_rates() {
        let values = [2.26, 2.42, 2.00, 3.40];
        // Hand oracle, written out term by term.
        let mean = (2.26 + 2.42 + 2.00 + 3.40) / 4.0;
        let ss = (2.26f64 - mean).powi(2)
            + (2.42f64 - mean).powi(2)
            + (2.00f64 - mean).powi(2)
            + (3.40f64 - mean).powi(2);
        let expected = (ss / 3.0).sqrt();
        assert!((sample_stdev(&values).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.611664).abs() < 1e-5);
    }

    #[test]
    fn stdev_is_homogeneous_in_scale() {
        let values = [1.0, 2.0, 4.0];
        let scaled: Vec<f64> = values.iter().map(|v| v * -3.0).collect();
        let a = sample_stdev(&values).unwrap();
        let b = sample_stdev(&scaled).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-12);
    }

    #[test]
    fn stdev_summary_requires_two_schemes() {
        let mut per_metric = BTreeMap::new();
        per_metric.insert("cpu".to_string(), vec![1.0]);
        assert!(matches!(
            scheme_stdev_summary(&per_metric),
            Err(AnalyticsError::TooFewSchemes { .. })
        ));
    }

    fn observation(id: &str, measured: f64, rating: f64) -> SchemeObservation {
        SchemeObservation {
            scheme_id: id.to_string(),
            measured: BTreeMap::from([(CostType::Battery, measured)]),
            avg_rating: BTreeMap::from([(CostType::Battery, rating)]),
        }
    }

    #[test]
    fn perfectly_inverse_ratings_correlate_negatively() {
        let observations: Vec<SchemeObservation> = (0..5)
            .map(|i| observation(&format!("A{i}"), i as f64, 5.0 - i as f64))
            .collect();
        let (coefficients, warnings) = correlate_costs_vs_ratings(&observations).unwrap();
        assert_eq!(coefficients[&CostType::Battery], -1.0);
        // The other three cost types had no data at all.
        assert_eq!(warnings.len(), 3);
    }

    #[test]
    fn orthogonal_fixture_correlates_to_zero() {
        // Symmetric construction: ratings mirror around the mean while
        // the measurement is symmetric, so covariance cancels exactly.
        let data = [(1.0, 1.0), (1.0, 3.0), (3.0, 3.0), (3.0, 1.0)];
        let observations: Vec<SchemeObservation> = data
            .iter()
            .enumerate()
            .map(|(i, (m, r))| observation(&format!("A{i}"), *m, *r))
            .collect();
        let (coefficients, _) = correlate_costs_vs_ratings(&observations).unwrap();
        assert!(coefficients[&CostType::Battery].abs() < 1e-12);
    }

    #[test]
    fn empty_observations_yield_warnings_not_errors() {
        let (coefficients, warnings) = correlate_costs_vs_ratings(&[]).unwrap();
        assert!(coefficients.is_empty());
        assert_eq!(warnings.len(), 4);
    }
}
