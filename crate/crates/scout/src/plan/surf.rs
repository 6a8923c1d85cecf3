//! Information surfing: greedy ascent of the smoothed belief surface,
//! restricted to the four cardinal directions.

use crate::grid::{CellId, Connectivity};
use crate::priors::ScoreMap;

use super::{Observation, PlanStep, Planner};

/// Follows the local derivative of a box-blurred belief map. `blur_radius`
/// controls the smoothing window ((2r+1)², zero-padded); radius 0 surfs the
/// raw belief.
#[derive(Debug, Clone, Copy)]
pub struct InformationSurfing {
    pub blur_radius: usize,
}

impl Default for InformationSurfing {
    fn default() -> Self {
        InformationSurfing { blur_radius: 1 }
    }
}

impl Planner for InformationSurfing {
    fn name(&self) -> &'static str {
        "information-surfing"
    }

    fn connectivity(&self) -> Connectivity {
        Connectivity::Four
    }

    fn next_step(&self, obs: &Observation) -> PlanStep {
        PlanStep::Move(choose(obs, self.blur_radius))
    }
}

/// One surfing step on the default (radius 1) smoothing.
pub fn is_step(obs: &Observation) -> CellId {
    choose(obs, 1)
}

/// Pick the next cell:
/// 1. among unvisited cardinal neighbors with a positive blurred-belief
///    difference, the largest difference wins (ties: higher raw belief,
///    then N, E, S, W order);
/// 2. on a plateau or local maximum (unvisited neighbors exist but none
///    ascends), the unvisited neighbor with the largest difference still
///    wins — grazing beats bouncing back into visited ground;
/// 3. with every neighbor visited, the agent walks toward the nearest
///    unvisited cell (ties: higher raw belief, then N, E, S, W). A greedy
///    re-entry rule would lock into a two-cell orbit around the local
///    argmax and burn the rest of the budget in place;
/// 4. once the whole grid is visited no escape exists, and the neighbor
///    with the highest raw belief wins, same N, E, S, W tie order.
fn choose(obs: &Observation, blur_radius: usize) -> CellId {
    let grid = obs.grid();
    let blur = box_blur(obs.belief, blur_radius);
    let center = blur[obs.position];

    let mut best_unvisited: Option<(CellId, f64)> = None;
    let mut best_any: Option<(CellId, f64)> = None;
    for nb in grid.neighbors4(obs.position) {
        let raw = obs.belief.get(nb);
        // strict > keeps the earliest direction on exact ties
        if best_any.is_none_or(|(_, b)| raw > b) {
            best_any = Some((nb, raw));
        }
        if !obs.visited[nb] {
            let diff = blur[nb] - center;
            let better = match best_unvisited {
                None => true,
                Some((cur, d)) => diff > d || (diff == d && raw > obs.belief.get(cur)),
            };
            if better {
                best_unvisited = Some((nb, diff));
            }
        }
    }
    if let Some((cell, _)) = best_unvisited {
        return cell;
    }
    if let Some(dist) = unvisited_distance_field(obs) {
        let mut best: Option<(CellId, u32, f64)> = None;
        for nb in grid.neighbors4(obs.position) {
            let (d, raw) = (dist[nb], obs.belief.get(nb));
            let better = match best {
                None => true,
                Some((_, bd, braw)) => d < bd || (d == bd && raw > braw),
            };
            if better {
                best = Some((nb, d, raw));
            }
        }
        return best.expect("grids of side ≥ 2 always have a cardinal neighbor").0;
    }
    best_any
        .map(|(c, _)| c)
        .expect("grids of side ≥ 2 always have a cardinal neighbor")
}

/// Hop count from each cell to its closest unvisited cell (multi-source
/// BFS over the cardinal grid), or None when everything is visited.
fn unvisited_distance_field(obs: &Observation) -> Option<Vec<u32>> {
    let grid = obs.grid();
    let mut dist = vec![u32::MAX; obs.visited.len()];
    let mut queue = std::collections::VecDeque::new();
    for (cell, &seen) in obs.visited.iter().enumerate() {
        if !seen {
            dist[cell] = 0;
            queue.push_back(cell);
        }
    }
    if queue.is_empty() {
        return None;
    }
    while let Some(cell) = queue.pop_front() {
        for nb in grid.neighbors4(cell) {
            if dist[nb] == u32::MAX {
                dist[nb] = dist[cell] + 1;
                queue.push_back(nb);
            }
        }
    }
    Some(dist)
}

/// Box blur with zero padding: every cell becomes the window sum divided by
/// the full window area, so border cells are pulled toward zero.
fn box_blur(map: &ScoreMap, radius: usize) -> Vec<f64> {
    let n = map.side();
    if radius == 0 {
        return map.values().to_vec();
    }
    let r = radius as isize;
    let area = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mut out = vec![0.0; n * n];
    for row in 0..n as isize {
        for col in 0..n as isize {
            let mut sum = 0.0;
            for dr in -r..=r {
                for dc in -r..=r {
                    let (rr, cc) = (row + dr, col + dc);
                    if rr >= 0 && rr < n as isize && cc >= 0 && cc < n as isize {
                        sum += map.get((rr * n as isize + cc) as usize);
                    }
                }
            }
            out[(row * n as isize + col) as usize] = sum / area;
        }
    }
    out
}
