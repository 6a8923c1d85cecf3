//! Boustrophedon coverage: sweep row 0 left→right, row 1 right→left, and so
//! on. One new cell per step, so a budget of 𝓑 covers exactly 𝓑+1 cells —
//! the coverage upper bound other planners are compared against.

use crate::grid::{CellId, Connectivity, Grid};

use super::{Observation, PlanStep, Planner};

#[derive(Debug, Clone, Copy, Default)]
pub struct Lawnmower;

/// The track starts here; episodes using this planner are pinned to it.
pub const LAWNMOWER_START: CellId = 0;

impl Planner for Lawnmower {
    fn name(&self) -> &'static str {
        "lawnmower"
    }

    fn connectivity(&self) -> Connectivity {
        Connectivity::Four
    }

    fn start_override(&self) -> Option<CellId> {
        Some(LAWNMOWER_START)
    }

    fn next_step(&self, obs: &Observation) -> PlanStep {
        match lawnmower_step(obs) {
            Some(cell) => PlanStep::Move(cell),
            None => PlanStep::CoverageComplete,
        }
    }
}

/// Next cell on the zigzag track, derived purely from the agent's position
/// (every cell lies on the track, so the planner is stateless). `None` once
/// the final cell is reached.
pub fn lawnmower_step(obs: &Observation) -> Option<CellId> {
    let grid = obs.grid();
    let idx = track_index(obs.position, grid);
    if idx + 1 >= grid.len() {
        None
    } else {
        Some(track_cell(idx + 1, grid))
    }
}

/// Position of a cell along the zigzag track.
fn track_index(cell: CellId, grid: Grid) -> usize {
    let n = grid.side();
    let (row, col) = (grid.row(cell), grid.col(cell));
    let within = if row % 2 == 0 { col } else { n - 1 - col };
    row * n + within
}

/// Inverse of `track_index`.
fn track_cell(idx: usize, grid: Grid) -> CellId {
    let n = grid.side();
    let (row, within) = (idx / n, idx % n);
    let col = if row % 2 == 0 { within } else { n - 1 - within };
    grid.cell(row, col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::ScoreMap;

    fn obs<'a>(position: CellId, visited: &'a [bool], belief: &'a ScoreMap) -> Observation<'a> {
        Observation {
            position,
            visited,
            belief,
            remaining_budget: 1000,
        }
    }

    #[test]
    fn zigzag_on_3x3() {
        let map = ScoreMap::uniform(3, 0.5).unwrap();
        let visited = vec![false; 9];
        // row 0 end → descend
        assert_eq!(lawnmower_step(&obs(2, &visited, &map)), Some(5));
        // row 1 runs right→left
        assert_eq!(lawnmower_step(&obs(5, &visited, &map)), Some(4));
        assert_eq!(lawnmower_step(&obs(3, &visited, &map)), Some(6));
        // track: 0 1 2 5 4 3 6 7 8 — exhausted at 8
        assert_eq!(lawnmower_step(&obs(8, &visited, &map)), None);
    }

    #[test]
    fn full_track_visits_every_cell_once() {
        let n = 6;
        let grid = Grid::new(n);
        let map = ScoreMap::uniform(n, 0.5).unwrap();
        let visited = vec![false; n * n];
        let mut seen = vec![false; n * n];
        let mut pos = LAWNMOWER_START;
        seen[pos] = true;
        let mut steps = 0;
        while let Some(next) = lawnmower_step(&obs(pos, &visited, &map)) {
            assert!(grid.adjacent(pos, next, Connectivity::Four));
            assert!(!seen[next], "cell {next} visited twice");
            seen[next] = true;
            pos = next;
            steps += 1;
        }
        assert_eq!(steps, n * n - 1);
        assert!(seen.iter().all(|&s| s));
    }
}
