//! Single-episode driver: world setup, the sense–adapt–move loop, and the
//! serializable result record.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapt::{tta_update, IntensityModel, MeasurementLog};
use crate::error::{Error, Result};
use crate::grid::Connectivity;
use crate::plan::{PlanStep, PlannerRegistry};
use crate::priors::{
    load_features, load_score_map, map_quality, score_map_hash, synth_scenario, FeatureField,
    ScoreMap,
};
use crate::regions;
use crate::world::{load_world, world_hash, AgentState, GridWorld};

use super::config::{EpisodeConfig, StartSpec, WorldSource};
use super::metrics::rmse;

/// Independent RNG streams derived from the one episode seed, spaced by the
/// 64-bit golden ratio so streams never collide for nearby seeds.
const STREAM_START: u64 = 1;
const STREAM_PARTITION: u64 = 2;

pub(crate) fn subseed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Belief-vs-truth error recorded at one budget fraction. `step` is the
/// step the measurement was actually taken at (early termination pins the
/// remaining checkpoints to the final step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseCheckpoint {
    pub fraction: f64,
    pub step: usize,
    pub rmse: f64,
}

/// Everything one episode produced, flat and JSON-friendly. One line of
/// `episodes.jsonl` is exactly one of these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub id: String,
    /// Suite bookkeeping; `None` for standalone episodes.
    pub template: Option<String>,
    pub arm: Option<String>,
    pub seed: u64,
    pub planner: String,
    /// Moves validated under this connectivity (4 or 8).
    pub connectivity: u8,
    pub tta_enabled: bool,
    pub budget: usize,
    pub start_cell: usize,
    /// True when the planner dictated a start cell different from the
    /// configured/random one.
    pub start_overridden: bool,
    pub targets_total: u32,
    pub targets_found: u32,
    /// Count-weighted fraction of targets found (0 when the world has none).
    pub found_fraction: f64,
    /// Step of the first positive measurement, if any.
    pub steps_to_first: Option<usize>,
    pub first_target_at_start: bool,
    pub steps_used: usize,
    pub rmse_at: Vec<RmseCheckpoint>,
    /// Steps at which an adaptation event ran (detections and scheduled).
    pub tta_event_steps: Vec<usize>,
    pub trajectory: Vec<usize>,
    pub world_hash: String,
    pub base_hash: String,
    /// Starting-map quality (mean base score over target cells); `None`
    /// only for a world without targets.
    pub base_quality: Option<f64>,
    /// Where the final belief map was written, when an output dir was given.
    pub lambda_map_path: Option<String>,
}

impl EpisodeResult {
    /// All-zero placeholder for tests that only care about a few fields.
    #[cfg(test)]
    pub(crate) fn blank() -> Self {
        EpisodeResult {
            id: String::new(),
            template: None,
            arm: None,
            seed: 0,
            planner: String::new(),
            connectivity: 4,
            tta_enabled: false,
            budget: 0,
            start_cell: 0,
            start_overridden: false,
            targets_total: 0,
            targets_found: 0,
            found_fraction: 0.0,
            steps_to_first: None,
            first_target_at_start: false,
            steps_used: 0,
            rmse_at: Vec::new(),
            tta_event_steps: Vec::new(),
            trajectory: Vec::new(),
            world_hash: String::new(),
            base_hash: String::new(),
            base_quality: None,
            lambda_map_path: None,
        }
    }
}

/// World, starting map, and optional features ready for an episode.
struct Setup {
    world: GridWorld,
    base: ScoreMap,
    features: Option<FeatureField>,
}

fn load_setup(cfg: &EpisodeConfig) -> Result<Setup> {
    match &cfg.world {
        WorldSource::Synth(params) => {
            // one seed drives the whole episode
            let mut p = params.clone();
            p.seed = cfg.seed;
            let (world, base, features) = synth_scenario(&p)?;
            Ok(Setup {
                world,
                base,
                features: Some(features),
            })
        }
        WorldSource::Files {
            world,
            base_map,
            features,
        } => {
            let world = load_world(world)?;
            let base = load_score_map(base_map)?;
            if base.side() != world.side() {
                return Err(Error::Config(format!(
                    "base map side {} does not match world side {}",
                    base.side(),
                    world.side()
                )));
            }
            let features = features
                .as_ref()
                .map(|p| -> Result<FeatureField> {
                    let f = load_features(p)?;
                    if f.side() != world.side() {
                        return Err(Error::Config(format!(
                            "feature side {} does not match world side {}",
                            f.side(),
                            world.side()
                        )));
                    }
                    Ok(f)
                })
                .transpose()?;
            Ok(Setup {
                world,
                base,
                features,
            })
        }
    }
}

/// Run one episode with the built-in planners.
pub fn run_episode(cfg: &EpisodeConfig) -> Result<(EpisodeResult, ScoreMap)> {
    run_episode_with(cfg, &PlannerRegistry::with_builtins())
}

/// Run one episode, resolving the planner through the given registry.
/// Returns the result record and the final belief map (the adapted
/// intensity map when adaptation ran, otherwise the base map).
pub fn run_episode_with(
    cfg: &EpisodeConfig,
    registry: &PlannerRegistry,
) -> Result<(EpisodeResult, ScoreMap)> {
    cfg.validate()?;
    let setup = load_setup(cfg)?;
    let world = &setup.world;
    let grid = world.grid();
    let planner = registry.build(&cfg.planner)?;

    // Start cell: config choice first, then the planner's override.
    let configured_start = match cfg.start {
        StartSpec::Cell(c) => {
            if !grid.contains(c) {
                return Err(Error::Config(format!(
                    "start cell {c} outside grid of {} cells",
                    grid.len()
                )));
            }
            c
        }
        StartSpec::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(cfg.seed, STREAM_START));
            rng.random_range(0..grid.len())
        }
    };
    let (start, start_overridden) = match planner.start_override() {
        Some(s) => (s, s != configured_start),
        None => (configured_start, false),
    };

    // Adaptation state. The belief the planner sees is the live intensity
    // map when adaptation is on, else the raw base map.
    let mut adaptive: Option<(IntensityModel, MeasurementLog)> = None;
    if let Some(tta_cfg) = &cfg.tta {
        tta_cfg.validate()?;
        let features = setup.features.as_ref().ok_or_else(|| {
            Error::Config("adaptation requires per-cell features for the region partition".into())
        })?;
        let partition = regions::partition(features, subseed(cfg.seed, STREAM_PARTITION))?;
        let model = IntensityModel::new(&setup.base, &partition)?;
        let log = MeasurementLog::new(&partition);
        adaptive = Some((model, log));
    }
    let mut belief: ScoreMap = match &adaptive {
        Some((model, _)) => model.lambda_map(),
        None => setup.base.clone(),
    };

    // Checkpoints: fraction → step, processed in step order. Ones that map
    // to step 0 are measured on the initial belief, before any sensing.
    let mut pending: VecDeque<(f64, usize)> = {
        let mut v: Vec<(f64, usize)> = cfg
            .checkpoints
            .iter()
            .map(|&f| (f, (f * cfg.budget as f64).round() as usize))
            .collect();
        v.sort_by_key(|&(_, step)| step);
        v.into()
    };
    let mut rmse_at: Vec<RmseCheckpoint> = Vec::with_capacity(pending.len());
    let gt = world.gt_score_map();
    while pending.front().is_some_and(|&(_, s)| s == 0) {
        let (fraction, step) = pending.pop_front().unwrap();
        rmse_at.push(RmseCheckpoint {
            fraction,
            step,
            rmse: rmse(&belief, gt)?,
        });
    }

    let mut state = AgentState::new(grid, start, cfg.budget)?;
    let mut sensed = vec![false; grid.len()];
    let targets_total = world.targets_total();
    let mut targets_found: u32 = 0;
    let mut steps_to_first: Option<usize> = None;
    let mut tta_event_steps: Vec<usize> = Vec::new();
    let mut last_event_step: usize = 0;

    // Sense the starting cell (step 0, costs no budget), then loop:
    // plan → move → sense → maybe adapt, until the budget runs out, the
    // planner finishes coverage, or every target is found.
    let m0 = world.sense(start, 0)?;
    sensed[start] = true;
    let first_target_at_start = m0.is_positive();
    if m0.is_positive() {
        targets_found += m0.positive_count;
        steps_to_first = Some(0);
    }
    if let Some((model, log)) = adaptive.as_mut() {
        let newly = log.record(m0)?;
        if newly && m0.is_positive() {
            *model = tta_update(model, log, cfg.tta.as_ref().unwrap())?;
            belief = model.lambda_map();
            tta_event_steps.push(0);
            last_event_step = 0;
        }
    }

    let all_found = |found: u32| targets_total > 0 && found == targets_total;
    if !all_found(targets_found) {
        while state.steps_used() < cfg.budget {
            let obs = crate::plan::Observation {
                position: state.position(),
                visited: state.visited(),
                belief: &belief,
                remaining_budget: state.remaining_budget(),
            };
            let next = match planner.next_step(&obs) {
                PlanStep::Move(c) => c,
                PlanStep::CoverageComplete => break,
            };
            state = state.apply_action(next, planner.connectivity())?;
            let t = state.steps_used();

            let m = world.sense(next, t)?;
            let newly = !sensed[next];
            sensed[next] = true;
            if newly && m.is_positive() {
                targets_found += m.positive_count;
                steps_to_first.get_or_insert(t);
            }

            if let Some((model, log)) = adaptive.as_mut() {
                let newly_logged = log.record(m)?;
                let detection = newly_logged && m.is_positive();
                let scheduled = t - last_event_step >= cfg.tta.as_ref().unwrap().cadence;
                if detection || scheduled {
                    *model = tta_update(model, log, cfg.tta.as_ref().unwrap())?;
                    belief = model.lambda_map();
                    tta_event_steps.push(t);
                    last_event_step = t;
                }
            }

            while pending.front().is_some_and(|&(_, s)| s <= t) {
                let (fraction, step) = pending.pop_front().unwrap();
                rmse_at.push(RmseCheckpoint {
                    fraction,
                    step,
                    rmse: rmse(&belief, gt)?,
                });
            }

            if all_found(targets_found) {
                break;
            }
        }
    }

    // Early termination: pin unreached checkpoints to the final belief.
    let final_step = state.steps_used();
    while let Some((fraction, _)) = pending.pop_front() {
        rmse_at.push(RmseCheckpoint {
            fraction,
            step: final_step,
            rmse: rmse(&belief, gt)?,
        });
    }

    let base_quality = if targets_total > 0 {
        Some(map_quality(&setup.base, world)?)
    } else {
        None
    };
    let result = EpisodeResult {
        id: format!("episode-{:06}", cfg.seed),
        template: None,
        arm: None,
        seed: cfg.seed,
        planner: planner.name().to_string(),
        connectivity: planner.connectivity().degree(),
        tta_enabled: cfg.tta.is_some(),
        budget: cfg.budget,
        start_cell: start,
        start_overridden,
        targets_total,
        targets_found,
        found_fraction: if targets_total > 0 {
            targets_found as f64 / targets_total as f64
        } else {
            0.0
        },
        steps_to_first,
        first_target_at_start,
        steps_used: state.steps_used(),
        rmse_at,
        tta_event_steps,
        trajectory: state.trajectory().to_vec(),
        world_hash: world_hash(world),
        base_hash: score_map_hash(&setup.base),
        base_quality,
        lambda_map_path: None,
    };
    Ok((result, belief))
}

/// Re-check the movement contract on a finished result: the trajectory
/// starts at `start_cell`, every hop is adjacent under the recorded
/// connectivity, and the step count stays within budget.
pub fn validate_trajectory(result: &EpisodeResult, side: usize) -> Result<()> {
    let grid = crate::grid::Grid::new(side);
    let conn = match result.connectivity {
        4 => Connectivity::Four,
        8 => Connectivity::Eight,
        d => return Err(Error::Config(format!("unknown connectivity degree {d}"))),
    };
    if result.trajectory.len() != result.steps_used + 1 {
        return Err(Error::Bounds(format!(
            "trajectory length {} does not match steps_used {} + 1",
            result.trajectory.len(),
            result.steps_used
        )));
    }
    if result.steps_used > result.budget {
        return Err(Error::Budget {
            steps_used: result.steps_used,
            budget: result.budget,
        });
    }
    if result.trajectory.first() != Some(&result.start_cell) {
        return Err(Error::Bounds(format!(
            "trajectory starts at {:?}, expected {}",
            result.trajectory.first(),
            result.start_cell
        )));
    }
    for w in result.trajectory.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !grid.contains(a) || !grid.contains(b) {
            return Err(Error::Bounds(format!("trajectory cell out of grid: {a}→{b}")));
        }
        if !grid.adjacent(a, b, conn) {
            return Err(Error::Adjacency {
                from: a,
                to: b,
                connectivity: conn.degree(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{Corruption, ScenarioParams};

    fn synth_cfg(seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            world: WorldSource::Synth(ScenarioParams {
                n: 8,
                num_regions: 2,
                targets_total: 3,
                target_region_bias: 0.8,
                corruption: Corruption::ModeSwap,
                seed: 999, // replaced by the episode seed below
            }),
            planner: crate::plan::PlannerSpec::named("information-surfing"),
            budget: 40,
            start: StartSpec::Random,
            checkpoints: vec![0.0, 0.5, 1.0],
            tta: Some(crate::adapt::TtaConfig::default()),
            seed,
        }
    }

    #[test]
    fn episode_is_deterministic() {
        let cfg = synth_cfg(42);
        let (a, map_a) = run_episode(&cfg).unwrap();
        let (b, map_b) = run_episode(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(map_a, map_b);
    }

    #[test]
    fn trajectory_and_budget_contract_holds() {
        for seed in 0..5 {
            let cfg = synth_cfg(seed);
            let (r, _) = run_episode(&cfg).unwrap();
            validate_trajectory(&r, 8).unwrap();
            assert!(r.steps_used <= cfg.budget);
            assert!((0.0..=1.0).contains(&r.found_fraction));
            assert_eq!(r.rmse_at.len(), 3);
            assert_eq!(r.rmse_at[0].step, 0);
        }
    }

    #[test]
    fn synth_seed_comes_from_episode() {
        // same episode seed with different inner synth seeds ⇒ same world
        let mut a = synth_cfg(7);
        let mut b = synth_cfg(7);
        if let WorldSource::Synth(p) = &mut a.world {
            p.seed = 1;
        }
        if let WorldSource::Synth(p) = &mut b.world {
            p.seed = 2;
        }
        let (ra, _) = run_episode(&a).unwrap();
        let (rb, _) = run_episode(&b).unwrap();
        assert_eq!(ra.world_hash, rb.world_hash);
    }

    #[test]
    fn tta_off_belief_never_moves() {
        let mut cfg = synth_cfg(3);
        cfg.tta = None;
        let (r, final_map) = run_episode(&cfg).unwrap();
        assert!(!r.tta_enabled);
        assert!(r.tta_event_steps.is_empty());
        // every checkpoint sees the same (base) map
        let first = r.rmse_at[0].rmse;
        assert!(r.rmse_at.iter().all(|c| c.rmse == first));
        // and the final belief is exactly the base map
        assert_eq!(score_map_hash(&final_map), r.base_hash);
    }

    #[test]
    fn tta_on_emits_events() {
        let (r, _) = run_episode(&synth_cfg(42)).unwrap();
        assert!(r.tta_enabled);
        // 40-step budget with cadence 20 guarantees scheduled events even
        // with no detections
        assert!(!r.tta_event_steps.is_empty());
        let mut sorted = r.tta_event_steps.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted, r.tta_event_steps, "events strictly increasing");
    }

    #[test]
    fn lawnmower_override_is_recorded() {
        let mut cfg = synth_cfg(11);
        cfg.planner = crate::plan::PlannerSpec::named("lawnmower");
        cfg.start = StartSpec::Cell(5);
        let (r, _) = run_episode(&cfg).unwrap();
        assert_eq!(r.start_cell, 0);
        assert!(r.start_overridden);
        assert_eq!(r.trajectory[0], 0);
    }

    #[test]
    fn fixed_start_with_target_found_at_step_zero() {
        // place the only target under the agent's feet
        let mut cfg = synth_cfg(0);
        cfg.tta = None;
        let gt = ScoreMap::uniform(4, 0.2).unwrap();
        let world = GridWorld::new(4, vec![(5, 2)], gt.clone(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let wpath = dir.path().join("w.json");
        let bpath = dir.path().join("b.csv");
        crate::world::save_world(&world, &wpath, None).unwrap();
        crate::priors::save_score_map(&gt, &bpath).unwrap();
        cfg.world = WorldSource::Files {
            world: wpath,
            base_map: bpath,
            features: None,
        };
        cfg.start = StartSpec::Cell(5);
        cfg.budget = 10;
        let (r, _) = run_episode(&cfg).unwrap();
        assert!(r.first_target_at_start);
        assert_eq!(r.steps_to_first, Some(0));
        assert_eq!(r.targets_found, 2);
        assert_eq!(r.found_fraction, 1.0);
        // all targets found immediately: no moves at all
        assert_eq!(r.steps_used, 0);
        assert_eq!(r.trajectory, vec![5]);
        // unreached checkpoints pinned to the final step
        assert!(r.rmse_at.iter().all(|c| c.step == 0));
    }

    #[test]
    fn tta_requires_features() {
        let mut cfg = synth_cfg(0);
        let gt = ScoreMap::uniform(4, 0.2).unwrap();
        let world = GridWorld::new(4, vec![(5, 1)], gt.clone(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let wpath = dir.path().join("w.json");
        let bpath = dir.path().join("b.csv");
        crate::world::save_world(&world, &wpath, None).unwrap();
        crate::priors::save_score_map(&gt, &bpath).unwrap();
        cfg.world = WorldSource::Files {
            world: wpath,
            base_map: bpath,
            features: None,
        };
        let err = run_episode(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn cadence_schedules_events_without_detections() {
        // target-free region start: lawnmower + no targets on the first row
        let mut cfg = synth_cfg(0);
        cfg.tta = Some(crate::adapt::TtaConfig {
            cadence: 5,
            ..Default::default()
        });
        cfg.planner = crate::plan::PlannerSpec::named("lawnmower");
        cfg.budget = 12;
        let gt = ScoreMap::uniform(6, 0.2).unwrap();
        // single target far down the track (cell 30 = row 5, col 0)
        let world = GridWorld::new(6, vec![(30, 1)], gt.clone(), 1).unwrap();
        let features = FeatureField::new(
            6,
            1,
            (0..36).map(|i| if i < 18 { 0.0 } else { 1.0 }).collect(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let wpath = dir.path().join("w.json");
        let bpath = dir.path().join("b.csv");
        let fpath = dir.path().join("f.json");
        crate::world::save_world(&world, &wpath, None).unwrap();
        crate::priors::save_score_map(&gt, &bpath).unwrap();
        crate::priors::save_features(&features, &fpath).unwrap();
        cfg.world = WorldSource::Files {
            world: wpath,
            base_map: bpath,
            features: Some(fpath),
        };
        let (r, _) = run_episode(&cfg).unwrap();
        // no detections in the first 12 track cells ⇒ purely scheduled
        assert_eq!(r.tta_event_steps, vec![5, 10]);
    }

    #[test]
    fn trajectory_validator_rejects_violations() {
        let (r, _) = run_episode(&synth_cfg(1)).unwrap();
        validate_trajectory(&r, 8).unwrap();

        // length no longer matches steps_used
        let mut broken = r.clone();
        broken.steps_used += 1;
        assert!(validate_trajectory(&broken, 8).is_err());

        // a diagonal hop under 4-connectivity
        let mut teleport = EpisodeResult::blank();
        teleport.connectivity = 4;
        teleport.budget = 4;
        teleport.steps_used = 1;
        teleport.trajectory = vec![0, 9]; // 8×8 diagonal
        assert!(matches!(
            validate_trajectory(&teleport, 8),
            Err(Error::Adjacency { .. })
        ));
        // legal under 8-connectivity
        teleport.connectivity = 8;
        validate_trajectory(&teleport, 8).unwrap();

        // budget overrun
        let mut over = EpisodeResult::blank();
        over.connectivity = 4;
        over.budget = 1;
        over.steps_used = 2;
        over.trajectory = vec![0, 1, 2];
        assert!(matches!(
            validate_trajectory(&over, 8),
            Err(Error::Budget { .. })
        ));
    }
}
