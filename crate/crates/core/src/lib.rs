//! Batch analysis of in-app advertising costs.
//!
//! The crate covers the desk-scale pipeline end to end:
//!
//! - [`inspector`] detects which ad networks and formats an app package
//!   integrates, from decompiled trees or raw dex type tables;
//! - [`profiler`] parses canonical measurement logs into sessions,
//!   computes per-run cost metrics, and separates ad-attributable cost
//!   from an ad-free prototype baseline;
//! - [`power`] houses the piecewise WiFi + per-frequency CPU battery
//!   model and its least-squares coefficient fitting;
//! - [`reviews`] filters ad-related user reviews, mines cost topics via
//!   phrase embedding and clustering, and classifies complaints into the
//!   four cost types;
//! - [`analytics`] computes revenue quantities, traffic dollar cost,
//!   spread summaries, and cost-versus-rating correlations;
//! - [`simulate`] generates seeded synthetic sessions with known ground
//!   truth so the whole chain is verifiable without hardware.

pub mod analytics;
mod fsio;
pub mod inspector;
pub mod power;
pub mod profiler;
pub mod reviews;
pub mod simulate;

pub use analytics::{
    ad_revenue, correlate_costs_vs_ratings, ecpm, fill_rate, pearson, round_half_even,
    sample_stdev, scheme_stdev_summary, traffic_dollar_cost, AnalyticsError, DataPlan,
    RevenueInputs, SchemeObservation,
};
pub use inspector::{
    detect_networks, extract_ad_formats, load_catalog, AdFormat, AdIntegrationScheme,
    AdNetworkCatalog, AppPackageInput, InputKind, InspectorError, Placement, SchemeReport,
};
pub use power::{
    cpu_power, fit_linear, total_power, wifi_power, CalibrationSample, CpuPowerBin, LinearFit,
    PowerError, PowerModel, WifiPowerParams,
};
pub use profiler::{
    aggregate_runs, compute_cost_vector, estimate_power, load_session, separate_costs,
    CostSeparation, CostVector, IncreaseRates, MeasurementSession, Metric, ProfileError,
    ProfileWarning, SessionManifest, DEFAULT_RUNS_EXPECTED,
};
pub use reviews::{
    classify_review, cluster_phrases, embed_phrases, extract_phrase_candidates,
    filter_ad_reviews, CostType, KeywordTable, PhraseCandidate, PhraseVector, ReviewError,
    ReviewRecord, DEFAULT_K, DEFAULT_RATING_CUTOFF,
};
pub use simulate::{generate_session, GeneratedSession, GroundTruth, NoiseSpec, SessionPlan};
