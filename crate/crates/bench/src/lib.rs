//! Shared input builders for the pipeline benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use intelliad_core::reviews::ReviewRecord;

/// A top log with `lines` one-second samples.
pub fn synthetic_top_log(lines: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut out = String::with_capacity(lines * 24);
    for t in 0..lines {
        let rss = 40_000 + rng.random_range(0..20_000);
        let cpu = rng.random_range(0.0..30.0);
        out.push_str(&format!("{t},1000,{rss},{cpu}\n"));
    }
    out
}

/// Clustered 2-d points: `per_blob` points around each of four centers.
pub fn blob_points(per_blob: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let centers = [(0.0, 0.0), (20.0, 0.0), (0.0, 20.0), (20.0, 20.0)];
    let mut points = Vec::with_capacity(per_blob * 4);
    for (cx, cy) in centers {
        for _ in 0..per_blob {
            points.push(vec![
                cx + rng.random_range(-1.0..1.0),
                cy + rng.random_range(-1.0..1.0),
            ]);
        }
    }
    points
}

/// A small complaint corpus cycled out to `count` reviews.
pub fn synthetic_reviews(count: usize) -> Vec<ReviewRecord> {
    let texts = [
        "so many ads everywhere in this app",
        "battery drain from ads all night long",
        "ads make scrolling slow and laggy",
        "ads keep loading without wifi and burn data",
        "memory hog once the banner ads appear",
        "premium version finally removes the ads",
    ];
    (0..count)
        .map(|i| ReviewRecord {
            app_id: format!("app{}", i % 7),
            rating: (i % 5 + 1) as u8,
            date: "2016-01-01".into(),
            text: texts[i % texts.len()].into(),
        })
        .collect()
}
