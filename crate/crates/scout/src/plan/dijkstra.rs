//! Query-driven routing: pick the most promising unvisited cell, then walk
//! the cheapest 8-connected path toward it, where "cheap" trades distance
//! against belief along the way and penalizes re-treading visited cells.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::grid::{CellId, Connectivity};

use super::{Observation, PlanStep, Planner};

/// Per-step cost factors: entering cell c costs
/// max(w_dist − w_prob·belief(c) + w_visited·[visited(c)], 1e-6).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DijkstraWeights {
    pub w_dist: f64,
    pub w_prob: f64,
    pub w_visited: f64,
}

impl Default for DijkstraWeights {
    fn default() -> Self {
        DijkstraWeights {
            w_dist: 1.0,
            w_prob: 0.5,
            w_visited: 0.5,
        }
    }
}

/// Edge costs stay strictly positive no matter how the weights combine.
const COST_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default)]
pub struct DijkstraQuery {
    pub weights: DijkstraWeights,
}

impl Planner for DijkstraQuery {
    fn name(&self) -> &'static str {
        "dijkstra-query"
    }

    fn connectivity(&self) -> Connectivity {
        Connectivity::Eight
    }

    fn next_step(&self, obs: &Observation) -> PlanStep {
        match dijkstra_query(obs, self.weights) {
            Some(path) => PlanStep::Move(path[0]),
            None => PlanStep::CoverageComplete,
        }
    }
}

/// Full path (start exclusive, query inclusive) to the unvisited cell with
/// the highest belief, or `None` when every cell is visited. Deterministic:
/// the query tie-breaks to the smaller cell index, and so does the heap.
pub fn dijkstra_query(obs: &Observation, weights: DijkstraWeights) -> Option<Vec<CellId>> {
    let grid = obs.grid();
    let query = (0..grid.len())
        .filter(|&c| !obs.visited[c])
        .max_by(|&a, &b| {
            // prefer higher belief, then the smaller index
            match obs.belief.get(a).partial_cmp(&obs.belief.get(b)).unwrap() {
                Ordering::Equal => b.cmp(&a),
                ord => ord,
            }
        })?;

    let enter_cost = |c: CellId| -> f64 {
        let visited = if obs.visited[c] { 1.0 } else { 0.0 };
        (weights.w_dist - weights.w_prob * obs.belief.get(c) + weights.w_visited * visited)
            .max(COST_FLOOR)
    };

    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut prev = vec![usize::MAX; grid.len()];
    let mut settled = vec![false; grid.len()];
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    dist[obs.position] = 0.0;
    heap.push(Entry {
        cost: 0.0,
        cell: obs.position,
    });
    while let Some(Entry { cost, cell }) = heap.pop() {
        if settled[cell] {
            continue;
        }
        settled[cell] = true;
        if cell == query {
            break;
        }
        for nb in grid.neighbors8(cell) {
            let cand = cost + enter_cost(nb);
            if cand < dist[nb] {
                dist[nb] = cand;
                prev[nb] = cell;
                heap.push(Entry {
                    cost: cand,
                    cell: nb,
                });
            }
        }
    }

    let mut path = vec![query];
    let mut cur = query;
    while prev[cur] != usize::MAX {
        cur = prev[cur];
        path.push(cur);
    }
    debug_assert_eq!(cur, obs.position, "query must be reachable on a grid");
    path.pop(); // drop the start cell
    path.reverse();
    Some(path)
}

/// Min-heap entry: smallest cost first, then smallest cell index. Costs are
/// finite and non-negative by construction, so the f64 ordering is total.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    cell: CellId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the cheapest on top
        other
            .cost
            .partial_cmp(&self.cost)
            .expect("costs are never NaN")
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
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

    const PLAIN: DijkstraWeights = DijkstraWeights {
        w_dist: 1.0,
        w_prob: 0.0,
        w_visited: 0.0,
    };

    #[test]
    fn plain_weights_give_chebyshev_shortest_path() {
        let n = 5;
        let mut values = vec![0.0; n * n];
        values[24] = 1.0; // query = bottom-right
        let map = ScoreMap::new(n, values).unwrap();
        let mut visited = vec![false; n * n];
        visited[0] = true;
        let path = dijkstra_query(&obs(0, &visited, &map), PLAIN).unwrap();
        // Chebyshev distance from (0,0) to (4,4) is 4
        assert_eq!(path.len(), 4);
        assert_eq!(*path.last().unwrap(), 24);
    }

    #[test]
    fn query_is_best_unvisited_belief() {
        let n = 4;
        let mut values = vec![0.1; n * n];
        values[5] = 0.9; // best overall, but visited
        values[10] = 0.8; // best unvisited
        let map = ScoreMap::new(n, values).unwrap();
        let mut visited = vec![false; n * n];
        visited[0] = true;
        visited[5] = true;
        let path = dijkstra_query(&obs(0, &visited, &map), DijkstraWeights::default()).unwrap();
        assert_eq!(*path.last().unwrap(), 10);
    }

    #[test]
    fn belief_ridge_attracts_equal_length_path() {
        // 5×5, query at the east end of the middle row; the straight east
        // path crosses a high-belief ridge only if it runs along row 2.
        let n = 5;
        let mut values = vec![0.0; n * n];
        for col in 1..4 {
            values[2 * n + col] = 0.8; // ridge on row 2
        }
        values[2 * n + 4] = 1.0; // query cell 14
        let map = ScoreMap::new(n, values).unwrap();
        let mut visited = vec![false; n * n];
        visited[2 * n] = true; // start at row 2, col 0
        let path = dijkstra_query(
            &obs(2 * n, &visited, &map),
            DijkstraWeights {
                w_dist: 1.0,
                w_prob: 0.5,
                w_visited: 0.5,
            },
        )
        .unwrap();
        assert_eq!(path, vec![11, 12, 13, 14], "expected the ridge path");
    }

    #[test]
    fn everything_visited_signals_complete() {
        let map = ScoreMap::uniform(3, 0.5).unwrap();
        let visited = vec![true; 9];
        assert!(dijkstra_query(&obs(4, &visited, &map), PLAIN).is_none());
        let planner = DijkstraQuery::default();
        assert_eq!(
            planner.next_step(&obs(4, &visited, &map)),
            PlanStep::CoverageComplete
        );
    }

    #[test]
    fn joint_scaling_preserves_path() {
        let n = 5;
        let values: Vec<f64> = (0..n * n).map(|c| ((c * 7) % 10) as f64 / 10.0).collect();
        let map = ScoreMap::new(n, values).unwrap();
        let mut visited = vec![false; n * n];
        visited[6] = true;
        visited[7] = true;
        // power-of-two scale keeps every intermediate float exact, so the
        // comparison sequence (and thus the path) must match bit-for-bit
        let w = DijkstraWeights {
            w_dist: 1.0,
            w_prob: 0.5,
            w_visited: 0.5,
        };
        let scaled = DijkstraWeights {
            w_dist: 2.0,
            w_prob: 1.0,
            w_visited: 1.0,
        };
        let a = dijkstra_query(&obs(6, &visited, &map), w).unwrap();
        let b = dijkstra_query(&obs(6, &visited, &map), scaled).unwrap();
        assert_eq!(a, b);
    }
}
