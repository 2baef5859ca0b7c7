//! Seeded k-means for phrase clustering.
//!
//! Lloyd iterations over squared euclidean distance with k-means++
//! seeding from a caller-supplied seed, so repeated runs are identical.
//! Convergence is declared when no centroid moves more than 1e-6, capped
//! at 300 iterations. Emptied clusters are reseeded from the point
//! farthest from its assigned centroid.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::embed::PhraseVector;
use super::phrases::PhraseCandidate;

/// The default cluster count for cost-topic discovery.
pub const DEFAULT_K: usize = 4;

const CONVERGENCE_EPS: f64 = 1e-6;
const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster index of each input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step;
    /// non-increasing by construction.
    pub wcss_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; distance ties go to the lower index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            // D^2-weighted draw via a cumulative scan.
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if target < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining points coincide with a centroid; take the
            // first still-unclaimed index for determinism.
            (0..points.len())
                .find(|i| d2[*i] > 0.0)
                .unwrap_or(rng.random_range(0..points.len()))
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, centroids.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Clusters `points` into `k` groups. Needs at least `k` points and
/// `k >= 1`; all points must share one dimension.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if points.len() < k {
        return Err(ClusterError::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ClusterError::MixedDimensions);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments = vec![0usize; points.len()];
    let mut wcss_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        iterations += 1;

        // Assignment step.
        let mut wcss = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignments[i] = c;
            wcss += d;
        }

        // Repair emptied clusters from the farthest point so every
        // cluster stays populated; moving a point onto its own centroid
        // only lowers the objective.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        for cluster in 0..k {
            if counts[cluster] > 0 {
                continue;
            }
            let farthest = points
                .iter()
                .enumerate()
                .filter(|(i, _)| counts[assignments[*i]] > 1)
                .max_by(|(ia, a), (ib, b)| {
                    let da = squared_distance(a, &centroids[assignments[*ia]]);
                    let db = squared_distance(b, &centroids[assignments[*ib]]);
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .map(|(i, _)| i);
            if let Some(i) = farthest {
                wcss -= squared_distance(&points[i], &centroids[assignments[i]]);
                counts[assignments[i]] -= 1;
                assignments[i] = cluster;
                counts[cluster] = 1;
                centroids[cluster] = points[i].clone();
            }
        }
        wcss_trace.push(wcss);

        // Update step.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut max_shift: f64 = 0.0;
        for cluster in 0..k {
            if counts[cluster] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[cluster]
                .iter()
                .map(|s| s / counts[cluster] as f64)
                .collect();
            max_shift = max_shift.max(squared_distance(&new, &centroids[cluster]).sqrt());
            centroids[cluster] = new;
        }
        if max_shift < CONVERGENCE_EPS {
            converged = true;
            break;
        }
    }

    // Final assignment against the settled centroids.
    let mut wcss = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (c, d) = nearest(p, &centroids);
        assignments[i] = c;
        wcss += d;
    }
    wcss_trace.push(wcss);

    Ok(KMeansResult {
        assignments,
        centroids,
        wcss_trace,
        iterations,
        converged,
    })
}

/// Groups phrase vectors into `k` topic clusters, keyed by cluster id.
pub fn cluster_phrases(
    vectors: &[PhraseVector],
    k: usize,
    seed: u64,
) -> Result<BTreeMap<usize, Vec<PhraseCandidate>>, ClusterError> {
    let points: Vec<Vec<f64>> = vectors.iter().map(|pv| pv.vector.clone()).collect();
    let result = kmeans(&points, k, seed)?;
    let mut clusters: BTreeMap<usize, Vec<PhraseCandidate>> = BTreeMap::new();
    for cluster in 0..k {
        clusters.entry(cluster).or_default();
    }
    for (pv, &cluster) in vectors.iter().zip(&result.assignments) {
        clusters.get_mut(&cluster).unwrap().push(pv.phrase.clone());
    }
    Ok(clusters)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClusterError {
    ZeroK,
    TooFewPoints { points: usize, k: usize },
    MixedDimensions,
}

impl fmt::Display for ClusterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterError::ZeroK => write!(f, "k must be at least 1"),
            ClusterError::TooFewPoints { points, k } => {
                write!(f, "cannot form {k} clusters from {points} points")
            }
            ClusterError::MixedDimensions => write!(f, "points have differing dimensions"),
        }
    }
}

impl std::error::Error for ClusterError {}
