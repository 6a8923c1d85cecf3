//! Region segmentation: k-means over per-cell features, with k chosen by
//! averaging the silhouette and elbow criteria (capped at 4).
//!
//! Regions drive the adaptive update's per-region coverage accounting, so
//! the partition must be deterministic in (features, seed) — every random
//! choice below flows from the caller's seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CellId;
use crate::priors::FeatureField;

/// A cell → region labeling with per-region sizes L_r.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionFile", into = "PartitionFile")]
pub struct RegionPartition {
    k: usize,
    labels: Vec<usize>,
    region_sizes: Vec<usize>,
}

#[derive(Serialize, Deserialize, Clone)]
struct PartitionFile {
    k: usize,
    labels: Vec<usize>,
}

impl TryFrom<PartitionFile> for RegionPartition {
    type Error = Error;
    fn try_from(f: PartitionFile) -> Result<Self> {
        RegionPartition::new(f.k, f.labels)
    }
}

impl From<RegionPartition> for PartitionFile {
    fn from(p: RegionPartition) -> Self {
        PartitionFile {
            k: p.k,
            labels: p.labels,
        }
    }
}

impl RegionPartition {
    pub fn new(k: usize, labels: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Degenerate("partition needs k ≥ 1".into()));
        }
        let mut region_sizes = vec![0usize; k];
        for (cell, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::Bounds(format!(
                    "label {l} at cell {cell} exceeds region count {k}"
                )));
            }
            region_sizes[l] += 1;
        }
        if let Some(empty) = region_sizes.iter().position(|&s| s == 0) {
            return Err(Error::Degenerate(format!("region {empty} is empty")));
        }
        Ok(RegionPartition {
            k,
            labels,
            region_sizes,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_of(&self, cell: CellId) -> usize {
        self.labels[cell]
    }

    /// L_r for each region; sums to the cell count.
    pub fn region_sizes(&self) -> &[usize] {
        &self.region_sizes
    }

    pub fn num_cells(&self) -> usize {
        self.labels.len()
    }
}

/// Cluster features into k groups: k-means++ seeding, Lloyd iterations with
/// Euclidean distance, at most 100 iterations or until the largest centroid
/// shift drops below 1e-8. Empty clusters re-seed to the point farthest
/// from its current centroid. Deterministic in `seed`.
pub fn kmeans(features: &FeatureField, k: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(kmeans_run(features, k, seed)?.labels)
}

pub(crate) struct KmeansRun {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after each Lloyd assignment pass.
    pub wcss_trace: Vec<f64>,
}

impl KmeansRun {
    pub fn final_wcss(&self) -> f64 {
        *self.wcss_trace.last().expect("at least one pass")
    }
}

const MAX_ITERS: usize = 100;
const SHIFT_TOL: f64 = 1e-8;

pub(crate) fn kmeans_run(features: &FeatureField, k: usize, seed: u64) -> Result<KmeansRun> {
    let npoints = features.num_points();
    let dim = features.dim();
    if k == 0 || k > npoints {
        return Err(Error::Degenerate(format!(
            "k must be in [1, {npoints}], got {k}"
        )));
    }
    let distinct = count_distinct(features);
    if k > distinct {
        return Err(Error::Degenerate(format!(
            "k={k} exceeds the {distinct} distinct feature points"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seeds(features, k, &mut rng);

    let mut labels = vec![0usize; npoints];
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERS {
        // Assignment pass; ties go to the lower centroid index.
        let mut wcss = 0.0;
        for (p, v) in features.vectors().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, ctr) in centroids.chunks_exact(dim).enumerate() {
                let d = sq_dist(v, ctr);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            labels[p] = best;
            wcss += best_d;
        }
        trace.push(wcss);

        // Update pass.
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (p, v) in features.vectors().enumerate() {
            let c = labels[p];
            counts[c] += 1;
            for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(v) {
                *s += x;
            }
        }
        let mut new_centroids = vec![0.0f64; k * dim];
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    new_centroids[c * dim + d] = sums[c * dim + d] / counts[c] as f64;
                }
            }
        }
        // Re-seed any empty cluster to the point currently farthest from its
        // assigned centroid (ties to the lower point index), one at a time.
        let mut claimed = vec![false; npoints];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far_p = 0usize;
            let mut far_d = -1.0;
            for (p, v) in features.vectors().enumerate() {
                if claimed[p] {
                    continue;
                }
                let assigned = &new_centroids[labels[p] * dim..(labels[p] + 1) * dim];
                let d = sq_dist(v, assigned);
                if d > far_d {
                    far_d = d;
                    far_p = p;
                }
            }
            claimed[far_p] = true;
            new_centroids[c * dim..(c + 1) * dim].copy_from_slice(features.vector(far_p));
        }

        let shift = centroids
            .chunks_exact(dim)
            .zip(new_centroids.chunks_exact(dim))
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = new_centroids;
        if shift < SHIFT_TOL {
            break;
        }
    }

    // Final assignment against the converged centroids so labels and WCSS
    // agree with what `centroids` ended as.
    let mut wcss = 0.0;
    for (p, v) in features.vectors().enumerate() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, ctr) in centroids.chunks_exact(dim).enumerate() {
            let d = sq_dist(v, ctr);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels[p] = best;
        wcss += best_d;
    }
    trace.push(wcss);

    Ok(KmeansRun {
        labels,
        wcss_trace: trace,
    })
}

/// k-means++: first centroid uniform, each next sampled with probability
/// proportional to squared distance from the nearest chosen centroid.
fn plus_plus_seeds(features: &FeatureField, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let npoints = features.num_points();
    let dim = features.dim();
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..npoints);
    centroids.extend_from_slice(features.vector(first));

    let mut d2: Vec<f64> = features
        .vectors()
        .map(|v| sq_dist(v, features.vector(first)))
        .collect();
    while centroids.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let chosen = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut pick = npoints - 1;
            for (p, &w) in d2.iter().enumerate() {
                if t < w {
                    pick = p;
                    break;
                }
                t -= w;
            }
            pick
        } else {
            // All mass at the chosen centroids (duplicate-heavy input);
            // fall back to the first point at distance 0 not yet a centroid.
            (0..npoints)
                .find(|&p| {
                    centroids
                        .chunks_exact(dim)
                        .all(|c| sq_dist(features.vector(p), c) > 0.0)
                })
                .unwrap_or(0)
        };
        let cv = features.vector(chosen);
        centroids.extend_from_slice(cv);
        for (p, v) in features.vectors().enumerate() {
            let d = sq_dist(v, cv);
            if d < d2[p] {
                d2[p] = d;
            }
        }
    }
    centroids
}

fn count_distinct(features: &FeatureField) -> usize {
    use std::collections::HashSet;
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for v in features.vectors() {
        // +0.0 normalizes -0.0 so bit-equality matches value-equality.
        seen.insert(v.iter().map(|&x| (x + 0.0).to_bits()).collect());
    }
    seen.len()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Mean silhouette score: per point, (b − a) / max(a, b) where a is the mean
/// distance to its own cluster and b the smallest mean distance to another
/// cluster. Singleton clusters score 0, as does a point with a = b = 0.
pub fn silhouette(features: &FeatureField, labels: &[usize]) -> Result<f64> {
    let dists = pairwise_dists(features);
    silhouette_with_dists(&dists, labels)
}

/// Silhouette over an arbitrary point set (rows of equal dimension), for
/// callers whose points do not form a square grid field.
pub fn silhouette_points(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Degenerate("silhouette needs points".into()));
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(Error::Bounds(format!(
            "point {bad} has dimension {}, expected {dim}",
            points[bad].len()
        )));
    }
    let n = points.len();
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        for j in 0..i {
            d.push(sq_dist(&points[i], &points[j]).sqrt());
        }
    }
    silhouette_with_dists(&DistMatrix { n, d }, labels)
}

/// Dense lower-triangular pairwise Euclidean distances.
pub(crate) struct DistMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistMatrix {
    fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.d[hi * (hi - 1) / 2 + lo]
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }
}

pub(crate) fn pairwise_dists(features: &FeatureField) -> DistMatrix {
    let n = features.num_points();
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        for j in 0..i {
            d.push(sq_dist(features.vector(i), features.vector(j)).sqrt());
        }
    }
    DistMatrix { n, d }
}

pub(crate) fn silhouette_with_dists(dists: &DistMatrix, labels: &[usize]) -> Result<f64> {
    let npoints = dists.len();
    if labels.len() != npoints {
        return Err(Error::Bounds(format!(
            "label count {} does not match point count {npoints}",
            labels.len()
        )));
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Degenerate(
            "silhouette undefined for fewer than 2 clusters".into(),
        ));
    }

    let mut total = 0.0;
    for i in 0..npoints {
        let own = labels[i];
        if sizes[own] == 1 {
            continue; // singleton convention: s(i) = 0
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..npoints {
            if j != i {
                sums[labels[j]] += dists.get(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && sizes[c] > 0 {
                b = b.min(sums[c] / sizes[c] as f64);
            }
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / npoints as f64)
}

/// Knobs for `select_k`. Defaults: candidates k ∈ [2,8], capped at 4.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SelectKOptions {
    pub k_min: usize,
    pub k_max: usize,
    pub cap: usize,
}

impl Default for SelectKOptions {
    fn default() -> Self {
        SelectKOptions {
            k_min: 2,
            k_max: 8,
            cap: 4,
        }
    }
}

struct KCandidate {
    k: usize,
    labels: Vec<usize>,
    wcss: f64,
    silhouette: f64,
}

fn evaluate_ks(
    features: &FeatureField,
    opts: SelectKOptions,
    seed: u64,
) -> Result<Vec<KCandidate>> {
    if opts.k_min < 2 || opts.k_max < opts.k_min {
        return Err(Error::Config(format!(
            "need k_max ≥ k_min ≥ 2, got [{}, {}]",
            opts.k_min, opts.k_max
        )));
    }
    // only as many clusters as there are distinct points
    let k_hi = opts.k_max.min(count_distinct(features));
    if k_hi < opts.k_min {
        return Err(Error::Degenerate(format!(
            "segmentation needs at least {} distinct feature points",
            opts.k_min
        )));
    }
    let dists = pairwise_dists(features);
    (opts.k_min..=k_hi)
        .map(|k| {
            // One sub-seed per k so reruns at the winning k reproduce the
            // exact run that was scored.
            let run = kmeans_run(features, k, seed.wrapping_add(k as u64))?;
            let sil = silhouette_with_dists(&dists, &run.labels)?;
            Ok(KCandidate {
                k,
                wcss: run.final_wcss(),
                silhouette: sil,
                labels: run.labels,
            })
        })
        .collect()
}

/// Perpendicular distance of each point on the WCSS curve to the chord
/// between its endpoints; the knee is the argmax (ties to the smaller k).
fn elbow_k(cands: &[KCandidate]) -> usize {
    let first = cands.first().expect("nonempty");
    let last = cands.last().expect("nonempty");
    if cands.len() == 1 {
        return first.k;
    }
    let (x0, y0) = (first.k as f64, first.wcss);
    let (x1, y1) = (last.k as f64, last.wcss);
    let chord = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
    let mut best_k = first.k;
    let mut best_d = f64::NEG_INFINITY;
    for c in cands {
        let d = if chord > 0.0 {
            ((x1 - x0) * (y0 - c.wcss) - (x0 - c.k as f64) * (y1 - y0)).abs() / chord
        } else {
            0.0
        };
        if d > best_d {
            best_d = d;
            best_k = c.k;
        }
    }
    best_k
}

fn winning_k(cands: &[KCandidate], cap: usize) -> usize {
    let k_sil = cands
        .iter()
        .fold((0usize, f64::NEG_INFINITY), |(bk, bs), c| {
            if c.silhouette > bs {
                (c.k, c.silhouette)
            } else {
                (bk, bs)
            }
        })
        .0;
    let k_elbow = elbow_k(cands);
    // Average of the two votes, rounding half up, then the cap.
    (k_sil + k_elbow).div_ceil(2).min(cap)
}

/// Choose the region count by running k-means for each candidate k and
/// averaging the silhouette argmax with the elbow knee, capped.
pub fn select_k(features: &FeatureField, seed: u64) -> Result<usize> {
    select_k_with(features, SelectKOptions::default(), seed)
}

pub fn select_k_with(features: &FeatureField, opts: SelectKOptions, seed: u64) -> Result<usize> {
    Ok(winning_k(&evaluate_ks(features, opts, seed)?, opts.cap))
}

/// Segment the field: pick k via `select_k`, then label cells with the
/// k-means run that was scored for that k.
pub fn partition(features: &FeatureField, seed: u64) -> Result<RegionPartition> {
    partition_with(features, SelectKOptions::default(), seed)
}

pub fn partition_with(
    features: &FeatureField,
    opts: SelectKOptions,
    seed: u64,
) -> Result<RegionPartition> {
    let cands = evaluate_ks(features, opts, seed)?;
    let k = winning_k(&cands, opts.cap);
    let labels = match cands.into_iter().find(|c| c.k == k) {
        Some(c) => c.labels,
        // The averaged-and-capped k can fall outside the candidate list
        // (e.g. cap < k_min); run it directly.
        None => kmeans(features, k, seed.wrapping_add(k as u64))?,
    };
    // Coincident centroids can in principle leave a label value unused;
    // compact so every region is non-empty and size accounting stays exact.
    let labels = relabel_compact(labels);
    let k_actual = labels.iter().max().map_or(0, |m| m + 1);
    RegionPartition::new(k_actual, labels)
}

/// Map labels onto 0..k' preserving first-appearance order, dropping any
/// unused label values so `RegionPartition`'s every-region-non-empty
/// invariant holds.
fn relabel_compact(labels: Vec<usize>) -> Vec<usize> {
    let mut remap: Vec<Option<usize>> = vec![None; labels.iter().max().map_or(0, |m| m + 1)];
    let mut next = 0usize;
    labels
        .into_iter()
        .map(|l| {
            *remap[l].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// Adjusted Rand index between two labelings; 1.0 = identical up to
/// permutation, ~0 = chance agreement.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same points");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for i in 0..n {
        table[a[i] * kb + b[i]] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_table: f64 = table.iter().map(|&x| c2(x)).sum();
    let sum_rows: f64 = rows.iter().map(|&x| c2(x)).sum();
    let sum_cols: f64 = cols.iter().map(|&x| c2(x)).sum();
    let expected = sum_rows * sum_cols / c2(n as u64);
    let max_index = (sum_rows + sum_cols) / 2.0;
    if (max_index - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (sum_table - expected) / (max_index - expected)
}
