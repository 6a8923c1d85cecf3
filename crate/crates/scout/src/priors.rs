//! Score maps and per-cell feature fields: the belief surfaces searched by
//! planners and the inputs to region segmentation.
//!
//! Real deployments load externally produced score maps; tests and the
//! benchmark synthesize scenarios with controllable region structure,
//! target placement bias, and base-map corruption.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellId, Grid};
use crate::world::GridWorld;

/// Per-cell scores in [0,1], row-major. The probability-like surface
/// planners treat as belief.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    n: usize,
    values: Vec<f64>,
}

impl ScoreMap {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Degenerate("score map side must be ≥ 1".into()));
        }
        if values.len() != n * n {
            return Err(Error::Bounds(format!(
                "score map expects {} values for side {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Numerical(format!(
                    "score map value {v} at cell {i} outside [0,1]"
                )));
            }
        }
        Ok(ScoreMap { n, values })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        ScoreMap::new(n, vec![value; n * n])
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, cell: CellId) -> f64 {
        self.values[cell]
    }

    /// (min, max, mean) over all cells.
    pub fn stats(&self) -> (f64, f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in &self.values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        (min, max, sum / self.values.len() as f64)
    }
}

/// Content hash of a score map, used to certify that paired benchmark arms
/// started from the same base belief.
pub fn score_map_hash(map: &ScoreMap) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(map.side().to_le_bytes());
    for &v in map.values() {
        hasher.update(v.to_le_bytes());
    }
    crate::world::hex(&hasher.finalize())
}

/// Load a score map from the CSV format described in the repository README:
/// header `n=<int>`, then n rows of n comma-separated decimals. Values are
/// accepted in [−0.001, 1.001] (tolerating producer rounding slop) and
/// clamped into [0,1]. Errors name the offending 1-based line and column.
pub fn load_score_map(path: impl AsRef<Path>) -> Result<ScoreMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_score_map(&text)
}

pub(crate) fn parse_score_map(text: &str) -> Result<ScoreMap> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim_end();
    let n: usize = header
        .strip_prefix("n=")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::MapParse {
            line: 1,
            column: 1,
            message: format!("expected header `n=<int>`, found {header:?}"),
        })?;
    if n == 0 {
        return Err(Error::MapParse {
            line: 1,
            column: 1,
            message: "side length must be ≥ 1".into(),
        });
    }

    let mut values = Vec::with_capacity(n * n);
    let mut data_rows = 0usize;
    for (idx, raw) in lines.enumerate() {
        let line_no = idx + 2; // 1-based, after the header
        let line = raw.trim_end();
        if line.is_empty() {
            continue; // tolerate a trailing blank line
        }
        data_rows += 1;
        if data_rows > n {
            return Err(Error::MapParse {
                line: line_no,
                column: 1,
                message: format!("more than {n} data rows"),
            });
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n {
            return Err(Error::MapParse {
                line: line_no,
                column: cells.len().min(n),
                message: format!("expected {n} cells, found {}", cells.len()),
            });
        }
        for (col, token) in cells.iter().enumerate() {
            let v: f64 = token.trim().parse().map_err(|_| Error::MapParse {
                line: line_no,
                column: col + 1,
                message: format!("not a number: {token:?}"),
            })?;
            if !v.is_finite() || !(-0.001..=1.001).contains(&v) {
                return Err(Error::MapParse {
                    line: line_no,
                    column: col + 1,
                    message: format!("value {v} outside [-0.001, 1.001]"),
                });
            }
            values.push(v.clamp(0.0, 1.0));
        }
    }
    if data_rows != n {
        return Err(Error::MapParse {
            line: data_rows + 1,
            column: 1,
            message: format!("expected {n} data rows, found {data_rows}"),
        });
    }
    ScoreMap::new(n, values)
}

/// Write a score map in the CSV format. 17 significant digits, so a
/// save/load round trip is bit-identical.
pub fn save_score_map(map: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_score_map(map)).map_err(|e| Error::io(path, e))
}

pub(crate) fn format_score_map(map: &ScoreMap) -> String {
    let n = map.side();
    let mut out = format!("n={n}\n");
    for row in 0..n {
        let cells: Vec<String> = (0..n)
            .map(|col| format!("{:.16e}", map.get(row * n + col)))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Per-cell feature vectors (row-major cells, `dim` components each) —
/// the clustering input. Any per-cell feature source is accepted; the
/// synthesizer emits region one-hots plus normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField {
    n: usize,
    dim: usize,
    values: Vec<f64>, // n² × dim, cell-major
}

impl FeatureField {
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Degenerate(
                "feature field needs side ≥ 1 and dim ≥ 1".into(),
            ));
        }
        if values.len() != n * n * dim {
            return Err(Error::Bounds(format!(
                "feature field expects {} values (side {n}, dim {dim}), got {}",
                n * n * dim,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite feature component at flat index {bad}"
            )));
        }
        Ok(FeatureField { n, dim, values })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_points(&self) -> usize {
        self.n * self.n
    }

    pub fn vector(&self, cell: CellId) -> &[f64] {
        &self.values[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureFile {
    n: usize,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureField> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: FeatureFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let mut flat = Vec::with_capacity(file.n * file.n * file.dim);
    for (i, row) in file.vectors.iter().enumerate() {
        if row.len() != file.dim {
            return Err(Error::Bounds(format!(
                "feature row {i} has {} components, expected {}",
                row.len(),
                file.dim
            )));
        }
        flat.extend_from_slice(row);
    }
    FeatureField::new(file.n, file.dim, flat)
}

pub fn save_features(field: &FeatureField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = FeatureFile {
        n: field.side(),
        dim: field.dim(),
        vectors: field.vectors().map(|v| v.to_vec()).collect(),
    };
    let text = serde_json::to_string(&file).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// How the base (planner-facing) map deviates from ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// Base equals ground truth.
    None,
    /// High- and low-score regions trade places: the belief actively
    /// points away from the targets.
    ModeSwap,
    /// Base carries no information: uniform 0.5 everywhere.
    UniformBlur,
}

/// Knobs for synthesizing one scenario. Deterministic in `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub n: usize,
    pub num_regions: usize,
    pub targets_total: usize,
    /// Fraction of targets placed in the designated "true" region.
    pub target_region_bias: f64,
    pub corruption: Corruption,
    pub seed: u64,
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("scenario side must be ≥ 2".into()));
        }
        if !(2..=4).contains(&self.num_regions) {
            return Err(Error::Config(format!(
                "num_regions must be in [2,4], got {}",
                self.num_regions
            )));
        }
        if self.targets_total == 0 {
            return Err(Error::Config("targets_total must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.target_region_bias) {
            return Err(Error::Config(format!(
                "target_region_bias must be in [0,1], got {}",
                self.target_region_bias
            )));
        }
        Ok(())
    }
}

/// Ground-truth/base score means inside and outside the true region.
const HIGH_SCORE: f64 = 0.8;
const LOW_SCORE: f64 = 0.1;
const SCORE_NOISE_SIGMA: f64 = 0.05;
const FEATURE_NOISE_SIGMA: f64 = 0.02;

/// Synthesize one scenario: a world with hidden targets, the base map a
/// planner would start from, and per-cell features for segmentation.
///
/// The grid splits into `num_regions` Voronoi blobs around seeded centroid
/// cells; region 0 is the "true" region holding `target_region_bias` of the
/// targets. Each pipeline stage draws from its own sub-stream of the seed,
/// so e.g. changing the corruption mode never shifts target placement.
pub fn synth_scenario(params: &ScenarioParams) -> Result<(GridWorld, ScoreMap, FeatureField)> {
    params.validate()?;
    let n = params.n;
    let n2 = n * n;
    let grid = Grid::new(n);

    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    // Fixed draw order; adding a stage later must append, not reorder.
    let mut centroid_rng = ChaCha8Rng::seed_from_u64(master.random::<u64>());
    let mut gt_rng = ChaCha8Rng::seed_from_u64(master.random::<u64>());
    let mut base_rng = ChaCha8Rng::seed_from_u64(master.random::<u64>());
    let mut target_rng = ChaCha8Rng::seed_from_u64(master.random::<u64>());
    let mut feature_rng = ChaCha8Rng::seed_from_u64(master.random::<u64>());

    let labels = voronoi_labels(grid, params.num_regions, &mut centroid_rng);

    let noise = Normal::new(0.0, SCORE_NOISE_SIGMA).expect("valid sigma");
    let mean_at = |cell: usize, swapped: bool| -> f64 {
        let in_true = labels[cell] == 0;
        if in_true != swapped {
            HIGH_SCORE
        } else {
            LOW_SCORE
        }
    };
    let gt_values: Vec<f64> = (0..n2)
        .map(|cell| (mean_at(cell, false) + noise.sample(&mut gt_rng)).clamp(0.0, 1.0))
        .collect();
    let gt = ScoreMap::new(n, gt_values)?;

    let base = match params.corruption {
        Corruption::None => gt.clone(),
        Corruption::ModeSwap => {
            let values: Vec<f64> = (0..n2)
                .map(|cell| (mean_at(cell, true) + noise.sample(&mut base_rng)).clamp(0.0, 1.0))
                .collect();
            ScoreMap::new(n, values)?
        }
        Corruption::UniformBlur => ScoreMap::uniform(n, 0.5)?,
    };

    // Targets: k_true distinct cells inside the true region, the rest on
    // distinct cells outside it.
    let region0: Vec<CellId> = (0..n2).filter(|&c| labels[c] == 0).collect();
    let outside: Vec<CellId> = (0..n2).filter(|&c| labels[c] != 0).collect();
    let k_true = ((params.target_region_bias * params.targets_total as f64).round() as usize)
        .min(params.targets_total);
    let k_out = params.targets_total - k_true;
    if k_true > region0.len() {
        return Err(Error::Infeasible(format!(
            "{k_true} targets requested in the true region, which has only {} cells",
            region0.len()
        )));
    }
    if k_out > outside.len() {
        return Err(Error::Infeasible(format!(
            "{k_out} targets requested outside the true region, which has only {} cells",
            outside.len()
        )));
    }
    let mut targets: Vec<(CellId, u32)> = Vec::with_capacity(params.targets_total);
    for idx in rand::seq::index::sample(&mut target_rng, region0.len(), k_true) {
        targets.push((region0[idx], 1));
    }
    for idx in rand::seq::index::sample(&mut target_rng, outside.len(), k_out) {
        targets.push((outside[idx], 1));
    }
    targets.sort_unstable();

    // Features: one-hot region identity + normalized (row, col), everything
    // jittered, so clustering has to work for it but cannot fail absent a bug.
    let dim = params.num_regions + 2;
    let fnoise = Normal::new(0.0, FEATURE_NOISE_SIGMA).expect("valid sigma");
    let mut fvalues = Vec::with_capacity(n2 * dim);
    let denom = (n - 1) as f64;
    for (cell, &label) in labels.iter().enumerate() {
        for r in 0..params.num_regions {
            let hot = if label == r { 1.0 } else { 0.0 };
            fvalues.push(hot + fnoise.sample(&mut feature_rng));
        }
        fvalues.push(grid.row(cell) as f64 / denom + fnoise.sample(&mut feature_rng));
        fvalues.push(grid.col(cell) as f64 / denom + fnoise.sample(&mut feature_rng));
    }
    let features = FeatureField::new(n, dim, fvalues)?;

    let world = GridWorld::new(n, targets, gt, params.seed)?;
    Ok((world, base, features))
}

/// Ground-truth region labels a synthesized scenario would produce; lets
/// tests score segmentation recovery without re-deriving Voronoi cells.
pub fn synth_region_labels(params: &ScenarioParams) -> Result<Vec<usize>> {
    params.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroid_rng = ChaCha8Rng::seed_from_u64(master.random::<u64>());
    Ok(voronoi_labels(
        Grid::new(params.n),
        params.num_regions,
        &mut centroid_rng,
    ))
}

/// Distinct centroid cells, then nearest-centroid labels (ties to the lower
/// region index). Euclidean Voronoi cells on a grid are contiguous blobs.
fn voronoi_labels(grid: Grid, num_regions: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut centroids: Vec<CellId> = Vec::with_capacity(num_regions);
    while centroids.len() < num_regions {
        let c = rng.random_range(0..grid.len());
        if !centroids.contains(&c) {
            centroids.push(c);
        }
    }
    (0..grid.len())
        .map(|cell| {
            let (r, c) = (grid.row(cell) as f64, grid.col(cell) as f64);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, &ctr) in centroids.iter().enumerate() {
                let dr = r - grid.row(ctr) as f64;
                let dc = c - grid.col(ctr) as f64;
                let d = dr * dr + dc * dc;
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Mean predicted score over target cells, weighted by target count.
/// The headline "how good was this map where it mattered" number.
pub fn map_quality(pred: &ScoreMap, world: &GridWorld) -> Result<f64> {
    if pred.side() != world.side() {
        return Err(Error::Bounds(format!(
            "map side {} does not match world side {}",
            pred.side(),
            world.side()
        )));
    }
    let mut weighted = 0.0;
    let mut total = 0u64;
    for (cell, count) in world.targets() {
        weighted += count as f64 * pred.get(cell);
        total += count as u64;
    }
    if total == 0 {
        return Err(Error::Degenerate(
            "map quality undefined for a world with no targets".into(),
        ));
    }
    Ok(weighted / total as f64)
}
