//! End-to-end checks across module boundaries: generated sessions flow
//! through parsing, cost computation, power estimation, and separation;
//! detection agrees between ingestion paths; mined phrases cluster
//! deterministically.

use std::collections::BTreeSet;
use std::fs;

use intelliad_core::inspector::{self, dex, AdNetworkCatalog, AppPackageInput};
use intelliad_core::power::{CpuPowerBin, PowerModel, WifiPowerParams};
use intelliad_core::profiler::{
    aggregate_runs, compute_cost_vector, estimate_power, load_session, separate_costs, Metric,
};
use intelliad_core::reviews::{
    cluster_phrases, embed_phrases, extract_phrase_candidates, tokenize_filtered, PpmiEmbedder,
    ReviewRecord,
};
use intelliad_core::simulate::{generate_session, NoiseSpec, SessionPlan};

fn test_model() -> PowerModel {
    PowerModel {
        wifi: WifiPowerParams {
            beta_low: 1.8,
            base_low: 25.0,
            beta_high: 0.6,
            base_high: 160.0,
            threshold_pps: 15.0,
        },
        cpu_bins: vec![
            CpuPowerBin { freq_khz: 300_000.0, beta_active: 120.0, beta_idle: 15.0 },
            CpuPowerBin { freq_khz: 1_200_000.0, beta_active: 650.0, beta_idle: 40.0 },
        ],
    }
}

fn prototype_plan(seed: u64) -> SessionPlan {
    let mut plan = SessionPlan::new("proto", 80.0);
    plan.rss_mean_kb = 50_000.0;
    plan.cpu_mean_pct = 3.0;
    plan.thread_count = 20;
    plan.cpu_freq_khz = 1_200_000;
    plan.packet_rate_pps = 2.0;
    plan.bytes_per_packet = 600;
    plan.seed = seed;
    plan
}

/// The ad plan lifts each plant by a fixed multiplier.
fn ad_plan(seed: u64) -> SessionPlan {
    let mut plan = prototype_plan(seed);
    plan.label = "ad".into();
    plan.rss_mean_kb *= 1.10;
    plan.cpu_mean_pct *= 1.686;
    plan.thread_count = 30; // x1.5
    plan.packet_rate_pps *= 3.0;
    plan.bytes_per_packet = 720; // x1.2
    plan
}

#[test]
fn noiseless_pipeline_recovers_planted_rates() {
    let dir = tempfile::tempdir().unwrap();
    let model = test_model();
    let proto = generate_session(&prototype_plan(1), dir.path()).unwrap();
    let ad = generate_session(&ad_plan(2), dir.path()).unwrap();

    let load = |generated: &intelliad_core::simulate::GeneratedSession| {
        let session = load_session(&generated.manifest_path).unwrap();
        let (cost, warnings) = compute_cost_vector(&session).unwrap();
        assert!(warnings.is_empty());
        estimate_power(&cost, &model).unwrap()
    };
    let proto_cost = load(&proto);
    let ad_cost = load(&ad);
    let separation = separate_costs(&ad_cost, &proto_cost);

    let expect = [
        (Metric::MemRssAvgKb, 0.10),
        (Metric::CpuUtilAvgPct, 0.686),
        (Metric::ThreadCountAvg, 0.5),
        (Metric::PacketCount, 2.0),
        (Metric::AvgPacketRatePps, 2.0),
        (Metric::TotalBytes, 2.6), // 3x packets at 1.2x bytes each
        (Metric::AvgCpuFreqKhz, 0.0),
    ];
    for (metric, planted) in expect {
        let rate = separation.increase_rates.get(metric).unwrap();
        assert!(
            (rate - planted).abs() < 1e-6,
            "{metric}: recovered {rate}, planted {planted}"
        );
    }

    // Power rate follows from the model: evaluate both sides directly.
    let p_proto = 1.8 * 2.0 + 25.0 + 650.0 * 0.03 + 40.0;
    let p_ad = 1.8 * 6.0 + 25.0 + 650.0 * (0.03 * 1.686) + 40.0;
    let planted_power_rate = (p_ad - p_proto) / p_proto;
    let power_rate = separation.increase_rates.get(Metric::PowerMw).unwrap();
    assert!(
        (power_rate - planted_power_rate).abs() < 1e-6,
        "power rate {power_rate} vs planted {planted_power_rate}"
    );
}

#[test]
fn noisy_four_run_aggregation_stays_within_five_percent() {
    let dir = tempfile::tempdir().unwrap();
    let model = test_model();
    let noise = NoiseSpec::uniform(0.05);

    let mut proto_runs = Vec::new();
    let mut ad_runs = Vec::new();
    for run in 0..4u64 {
        let mut proto = prototype_plan(100 + run);
        proto.label = format!("proto_run{run}");
        proto.noise = noise;
        let mut ad = ad_plan(200 + run);
        ad.label = format!("ad_run{run}");
        ad.noise = noise;
        for (plan, bucket) in [(proto, &mut proto_runs), (ad, &mut ad_runs)] {
            let generated = generate_session(&plan, dir.path()).unwrap();
            let session = load_session(&generated.manifest_path).unwrap();
            let (cost, _) = compute_cost_vector(&session).unwrap();
            bucket.push(estimate_power(&cost, &model).unwrap());
        }
    }

    let (proto_mean, warn_a) = aggregate_runs(&proto_runs, 4).unwrap();
    let (ad_mean, warn_b) = aggregate_runs(&ad_runs, 4).unwrap();
    assert!(warn_a.is_none() && warn_b.is_none());
    let separation = separate_costs(&ad_mean, &proto_mean);

    for (metric, planted) in [
        (Metric::MemRssAvgKb, 0.10),
        (Metric::CpuUtilAvgPct, 0.686),
        (Metric::ThreadCountAvg, 0.5),
        (Metric::TotalBytes, 2.6),
    ] {
        let rate = separation.increase_rates.get(metric).unwrap();
        assert!(
            (rate - planted).abs() < 0.05,
            "{metric}: noisy recovery {rate} drifted past 5% from {planted}"
        );
    }
}

#[test]
fn dex_detection_is_a_subset_of_tree_detection() {
    // One app, both ingestion forms. The tree carries code referencing
    // two networks; the dex type table only retains one of them.
    let dir = tempfile::tempdir().unwrap();
    let tree_root = dir.path().join("tree");
    fs::create_dir_all(tree_root.join("smali")).unwrap();
    fs::write(
        tree_root.join("smali/Main.smali"),
        "new-instance v0, Lcom/mopub/mobileads/MoPubInterstitial;\n\
         sget-object v1, Lcom/google/android/gms/ads/AdSize;->BANNER:Lcom/google/android/gms/ads/AdSize;\n",
    )
    .unwrap();

    let dex_root = dir.path().join("dex");
    fs::create_dir_all(&dex_root).unwrap();
    let image = dex::assemble_type_table(&[
        "Lcom/example/Main;",
        "Lcom/mopub/mobileads/MoPubInterstitial;",
    ]);
    fs::write(dex_root.join("classes.dex"), image).unwrap();

    let catalog = AdNetworkCatalog::builtin();
    let tree = AppPackageInput::decompiled_tree(&tree_root).unwrap();
    let raw = AppPackageInput::raw_dex(&dex_root).unwrap();
    let from_tree = inspector::detect_networks(&tree, &catalog).unwrap();
    let from_dex = inspector::detect_networks(&raw, &catalog).unwrap();

    assert!(from_dex.is_subset(&from_tree), "{from_dex:?} vs {from_tree:?}");
    assert_eq!(from_tree, BTreeSet::from(["AdMob".to_string(), "MoPub".to_string()]));
    assert_eq!(from_dex, BTreeSet::from(["MoPub".to_string()]));
}

#[test]
fn adding_a_referencing_file_never_removes_networks() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("app");
    fs::create_dir_all(root.join("smali")).unwrap();
    fs::write(
        root.join("smali/A.smali"),
        "check-cast v0, Lcom/mopub/mobileads/MoPubView;\n",
    )
    .unwrap();
    let catalog = AdNetworkCatalog::builtin();
    let before = inspector::detect_networks(
        &AppPackageInput::decompiled_tree(&root).unwrap(),
        &catalog,
    )
    .unwrap();

    fs::write(
        root.join("smali/B.smali"),
        "invoke-virtual {v0}, Lcom/inmobi/ads/InMobiInterstitial;->show()V\n",
    )
    .unwrap();
    let after = inspector::detect_networks(
        &AppPackageInput::decompiled_tree(&root).unwrap(),
        &catalog,
    )
    .unwrap();
    assert!(before.is_subset(&after));
    assert!(after.contains("InMobi"));
}

#[test]
fn engineered_corpus_reproduces_reference_global_means() {
    use intelliad_core::reviews::{aggregate_cost_ratings, CostType, KeywordTable};
    use std::collections::BTreeMap;

    // One single-type review text per cost type; counts and two-star
    // shares chosen so each per-type mean is an exact decimal.
    let recipes: [(&str, usize, usize, f64); 4] = [
        ("so many ads in here", 125, 19, 1.152),
        ("memory problems again", 1000, 373, 1.373),
        ("needs wifi always", 1000, 197, 1.197),
        ("battery dies quickly", 500, 99, 1.198),
    ];
    let mut reviews = Vec::new();
    for (text, total, twos, _) in recipes {
        for i in 0..total {
            reviews.push(ReviewRecord {
                app_id: "app".into(),
                rating: if i < twos { 2 } else { 1 },
                date: "2016-01-01".into(),
                text: text.into(),
            });
        }
    }
    let table = KeywordTable::builtin();
    let scheme_map = BTreeMap::from([("app".to_string(), "S".to_string())]);
    let cells = aggregate_cost_ratings(&reviews, &table, &scheme_map, 3).unwrap();
    let expected = [
        (CostType::NumAds, 1.152),
        (CostType::MemCpu, 1.373),
        (CostType::Traffic, 1.197),
        (CostType::Battery, 1.198),
    ];
    for (cost_type, mean) in expected {
        assert_eq!(
            cells[&("S".to_string(), cost_type)],
            mean,
            "global mean for {cost_type}"
        );
    }
    assert_eq!(cells.len(), 4, "each review must map to exactly one type");
}

#[test]
fn mining_pipeline_is_deterministic_from_corpus_to_clusters() {
    let texts = [
        "battery drain battery drain all night",
        "battery drain and power hungry ads",
        "slow loading slow loading every time",
        "slow loading and laggy scrolling ads",
        "so many ads many ads on every screen",
        "many ads appear without wifi connection",
        "without wifi it still uses data for ads",
        "premium version removes ads happily",
    ];
    let reviews: Vec<ReviewRecord> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| ReviewRecord {
            app_id: format!("app{}", i % 2),
            rating: 1,
            date: "2016-01-01".into(),
            text: (*t).into(),
        })
        .collect();
    let stopwords = intelliad_core::reviews::default_stopwords();
    let candidates = extract_phrase_candidates(&reviews, &stopwords);
    assert!(!candidates.is_empty());

    let tokens: Vec<Vec<String>> = reviews
        .iter()
        .map(|r| tokenize_filtered(&r.text, &stopwords))
        .collect();
    let embedder = PpmiEmbedder::fit(&tokens, 16, 2);
    let (vectors, warnings) = embed_phrases(&candidates, &embedder);
    assert!(warnings.is_empty());

    let run_a = cluster_phrases(&vectors, 4, 9).unwrap();
    let run_b = cluster_phrases(&vectors, 4, 9).unwrap();
    assert_eq!(run_a, run_b);
    let assigned: usize = run_a.values().map(Vec::len).sum();
    assert_eq!(assigned, vectors.len());
}
