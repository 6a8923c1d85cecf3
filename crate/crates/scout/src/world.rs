//! Search environment: hidden targets on a square grid, a perfect per-cell
//! sensor, and budgeted agent movement.
//!
//! The sensor covers exactly the agent's cell and returns the true target
//! count there — no noise, no field of view. Movement costs one step per
//! cell, diagonal or not; the budget bounds steps, never sensing.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellId, Connectivity, Grid};
use crate::priors::ScoreMap;

/// Ground truth for one search instance: grid geometry, target multiset,
/// and the ground-truth score map (used only for metrics, never by planners).
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    n: usize,
    /// cell → target count, counts ≥ 1, keyed by cell for canonical order.
    targets: BTreeMap<CellId, u32>,
    gt_score_map: ScoreMap,
    seed: u64,
}

impl GridWorld {
    pub fn new(
        n: usize,
        targets: impl IntoIterator<Item = (CellId, u32)>,
        gt_score_map: ScoreMap,
        seed: u64,
    ) -> Result<Self> {
        let grid = Grid::new(n);
        if gt_score_map.side() != n {
            return Err(Error::Bounds(format!(
                "ground-truth map side {} does not match world side {n}",
                gt_score_map.side()
            )));
        }
        let mut map = BTreeMap::new();
        for (cell, count) in targets {
            if !grid.contains(cell) {
                return Err(Error::Bounds(format!(
                    "target cell {cell} outside grid of {} cells",
                    grid.len()
                )));
            }
            if count == 0 {
                return Err(Error::Degenerate(format!(
                    "target at cell {cell} has count 0; counts must be ≥ 1"
                )));
            }
            *map.entry(cell).or_insert(0) += count;
        }
        Ok(GridWorld {
            n,
            targets: map,
            gt_score_map,
            seed,
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.n)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gt_score_map(&self) -> &ScoreMap {
        &self.gt_score_map
    }

    /// Target cells with their counts, in ascending cell order.
    pub fn targets(&self) -> impl Iterator<Item = (CellId, u32)> + '_ {
        self.targets.iter().map(|(&c, &k)| (c, k))
    }

    pub fn target_count_at(&self, cell: CellId) -> u32 {
        self.targets.get(&cell).copied().unwrap_or(0)
    }

    /// Total number of targets, counting multiplicity.
    pub fn targets_total(&self) -> u32 {
        self.targets.values().sum()
    }

    /// Perfect sensor read of one cell. Pure: never mutates the world, and
    /// identical arguments always return identical measurements.
    pub fn sense(&self, cell: CellId, step: usize) -> Result<Measurement> {
        if !self.grid().contains(cell) {
            return Err(Error::Bounds(format!(
                "sense at cell {cell} outside grid of {} cells",
                self.grid().len()
            )));
        }
        Ok(Measurement {
            cell,
            positive_count: self.target_count_at(cell),
            step,
        })
    }
}

/// One sensor reading: the cell, the exact target count found there
/// (0 = negative), and the step index at which it was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measurement {
    pub cell: CellId,
    pub positive_count: u32,
    pub step: usize,
}

impl Measurement {
    pub fn is_positive(&self) -> bool {
        self.positive_count > 0
    }
}

/// Agent pose plus movement bookkeeping. Updates are copy-on-write:
/// `apply_action` returns a new state, so episodes can replay or branch
/// without aliasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    grid: Grid,
    position: CellId,
    visited: Vec<bool>,
    steps_used: usize,
    budget: usize,
    trajectory: Vec<CellId>,
}

impl AgentState {
    pub fn new(grid: Grid, start: CellId, budget: usize) -> Result<Self> {
        if !grid.contains(start) {
            return Err(Error::Bounds(format!(
                "start cell {start} outside grid of {} cells",
                grid.len()
            )));
        }
        let mut visited = vec![false; grid.len()];
        visited[start] = true;
        Ok(AgentState {
            grid,
            position: start,
            visited,
            steps_used: 0,
            budget,
            trajectory: vec![start],
        })
    }

    pub fn position(&self) -> CellId {
        self.position
    }

    pub fn steps_used(&self) -> usize {
        self.steps_used
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn visited(&self) -> &[bool] {
        &self.visited
    }

    pub fn is_visited(&self, cell: CellId) -> bool {
        self.visited[cell]
    }

    pub fn trajectory(&self) -> &[CellId] {
        &self.trajectory
    }

    pub fn remaining_budget(&self) -> usize {
        self.budget - self.steps_used
    }

    /// Move one cell. Diagonal moves cost one step like cardinal ones, so
    /// the budget counts steps taken regardless of connectivity.
    pub fn apply_action(&self, next_cell: CellId, connectivity: Connectivity) -> Result<AgentState> {
        let grid = self.grid;
        if self.steps_used >= self.budget {
            return Err(Error::Budget {
                steps_used: self.steps_used,
                budget: self.budget,
            });
        }
        if !grid.contains(next_cell) {
            return Err(Error::Bounds(format!(
                "move to cell {next_cell} outside grid of {} cells",
                grid.len()
            )));
        }
        if !grid.adjacent(self.position, next_cell, connectivity) {
            return Err(Error::Adjacency {
                from: self.position,
                to: next_cell,
                connectivity: connectivity.degree(),
            });
        }
        let mut next = self.clone();
        next.position = next_cell;
        next.visited[next_cell] = true;
        next.steps_used += 1;
        next.trajectory.push(next_cell);
        Ok(next)
    }
}

/// On-disk form of a world. The ground-truth map may be inlined as a flat
/// row-major array or referenced as a score-map CSV path (relative paths
/// resolve against the world file's directory).
#[derive(Debug, Serialize, Deserialize)]
struct WorldFile {
    n: usize,
    targets: Vec<(CellId, u32)>,
    gt_score_map: GtSource,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum GtSource {
    Inline(Vec<f64>),
    Path(String),
}

pub fn load_world(path: impl AsRef<Path>) -> Result<GridWorld> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: WorldFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let gt = match file.gt_score_map {
        GtSource::Inline(values) => ScoreMap::new(file.n, values)?,
        GtSource::Path(rel) => {
            let map_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            crate::priors::load_score_map(map_path)?
        }
    };
    GridWorld::new(file.n, file.targets, gt, file.seed)
}

/// Write a world as JSON. With `gt_csv = Some(name)` the ground-truth map is
/// saved to `name` next to the world file and referenced by relative path;
/// otherwise it is inlined.
pub fn save_world(world: &GridWorld, path: impl AsRef<Path>, gt_csv: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let gt = match gt_csv {
        Some(name) => {
            let map_path = path.parent().unwrap_or(Path::new(".")).join(name);
            crate::priors::save_score_map(world.gt_score_map(), map_path)?;
            GtSource::Path(name.to_string())
        }
        None => GtSource::Inline(world.gt_score_map().values().to_vec()),
    };
    let file = WorldFile {
        n: world.side(),
        targets: world.targets().collect(),
        gt_score_map: gt,
        seed: world.seed(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Canonical content hash of a world (geometry, targets, ground truth,
/// seed). Equal hashes across suite arms certify that paired episodes saw
/// the same instance.
pub fn world_hash(world: &GridWorld) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(world.side().to_le_bytes());
    hasher.update(world.seed().to_le_bytes());
    for (cell, count) in world.targets() {
        hasher.update((cell as u64).to_le_bytes());
        hasher.update(count.to_le_bytes());
    }
    for &v in world.gt_score_map().values() {
        hasher.update(v.to_le_bytes());
    }
    hex(&hasher.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
