//! Planners behind one interface: each step they see the agent's position,
//! visitation mask, current belief surface, and remaining budget, and emit
//! the next cell (or declare coverage complete).
//!
//! Built-ins are registered by name in [`PlannerRegistry`]; external
//! planners plug in through [`PlannerRegistry::register`] without touching
//! episode code.

mod dijkstra;
mod lawnmower;
mod surf;

pub use dijkstra::{dijkstra_query, DijkstraQuery, DijkstraWeights};
pub use lawnmower::{lawnmower_step, Lawnmower};
pub use surf::{is_step, InformationSurfing};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellId, Connectivity, Grid};
use crate::priors::ScoreMap;

/// Everything a planner may look at when choosing the next cell.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub position: CellId,
    pub visited: &'a [bool],
    /// Current belief surface (adapted intensity map when adaptation is on,
    /// otherwise the base map). Raw per-cell scores in [0,1], not normalized.
    pub belief: &'a ScoreMap,
    pub remaining_budget: usize,
}

impl<'a> Observation<'a> {
    pub fn grid(&self) -> Grid {
        Grid::new(self.belief.side())
    }

    /// Belief as a probability distribution (sums to 1) for planners that
    /// need one. A zero-mass belief becomes uniform.
    pub fn normalized_belief(&self) -> Vec<f64> {
        let sum: f64 = self.belief.values().iter().sum();
        if sum > 0.0 {
            self.belief.values().iter().map(|v| v / sum).collect()
        } else {
            vec![1.0 / self.belief.len() as f64; self.belief.len()]
        }
    }
}

/// A planner's verdict for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStep {
    Move(CellId),
    /// Nothing left to visit under this planner's policy.
    CoverageComplete,
}

/// One policy for choosing moves. Implementations must be deterministic in
/// the observation and hold no per-episode mutable state, so episodes can
/// share one instance across threads.
pub trait Planner: Send + Sync {
    /// Registry name, e.g. "lawnmower".
    fn name(&self) -> &'static str;
    /// Connectivity this planner moves (and is validated) under.
    fn connectivity(&self) -> Connectivity;
    /// Fixed start cell, for planners whose policy dictates one.
    fn start_override(&self) -> Option<CellId> {
        None
    }
    fn next_step(&self, obs: &Observation) -> PlanStep;
}

/// The three built-in policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlannerKind {
    InformationSurfing,
    Lawnmower,
    DijkstraQuery,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::InformationSurfing => "information-surfing",
            PlannerKind::Lawnmower => "lawnmower",
            PlannerKind::DijkstraQuery => "dijkstra-query",
        }
    }

    pub fn connectivity(self) -> Connectivity {
        match self {
            PlannerKind::InformationSurfing | PlannerKind::Lawnmower => Connectivity::Four,
            PlannerKind::DijkstraQuery => Connectivity::Eight,
        }
    }
}

/// Planner selection as it appears in configs: a kind name plus whatever
/// parameters that kind accepts.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlannerSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl PlannerSpec {
    pub fn named(kind: &str) -> Self {
        PlannerSpec {
            kind: kind.to_string(),
            params: serde_json::Map::new(),
        }
    }
}

type Builder = Box<dyn Fn(&serde_json::Map<String, serde_json::Value>) -> Result<Box<dyn Planner>> + Send + Sync>;

/// Name → constructor table. `with_builtins` registers the three shipped
/// planners; callers may add their own before building episodes.
pub struct PlannerRegistry {
    builders: BTreeMap<String, Builder>,
}

impl PlannerRegistry {
    pub fn empty() -> Self {
        PlannerRegistry {
            builders: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = PlannerRegistry::empty();
        reg.register(PlannerKind::InformationSurfing.name(), |params| {
            let p: SurfParams = from_params(params)?;
            Ok(Box::new(InformationSurfing {
                blur_radius: p.blur_radius,
            }))
        });
        reg.register(PlannerKind::Lawnmower.name(), |params| {
            let _: EmptyParams = from_params(params)?;
            Ok(Box::new(Lawnmower))
        });
        reg.register(PlannerKind::DijkstraQuery.name(), |params| {
            let p: DijkstraParams = from_params(params)?;
            Ok(Box::new(DijkstraQuery {
                weights: p.weights.into(),
            }))
        });
        reg
    }

    pub fn register<F>(&mut self, name: &str, build: F)
    where
        F: Fn(&serde_json::Map<String, serde_json::Value>) -> Result<Box<dyn Planner>>
            + Send
            + Sync
            + 'static,
    {
        self.builders.insert(name.to_string(), Box::new(build));
    }

    pub fn names(&self) -> Vec<&str> {
        self.builders.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &PlannerSpec) -> Result<Box<dyn Planner>> {
        match self.builders.get(&spec.kind) {
            Some(b) => b(&spec.params).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("planner {:?}: {msg}", spec.kind)),
                other => other,
            }),
            None => Err(Error::Config(format!(
                "unknown planner {:?}; registered: {}",
                spec.kind,
                self.names().join(", ")
            ))),
        }
    }
}

fn from_params<T: serde::de::DeserializeOwned>(
    params: &serde_json::Map<String, serde_json::Value>,
) -> Result<T> {
    serde_json::from_value(serde_json::Value::Object(params.clone()))
        .map_err(|e| Error::Config(e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SurfParams {
    blur_radius: usize,
}

impl Default for SurfParams {
    fn default() -> Self {
        SurfParams { blur_radius: 1 }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EmptyParams {}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct DijkstraParams {
    weights: WeightsForm,
}

/// Weights accept either the tuple order [w_dist, w_prob, w_visited] or
/// named fields.
#[derive(Deserialize)]
#[serde(untagged)]
enum WeightsForm {
    Array([f64; 3]),
    Named {
        #[serde(default = "default_w_dist")]
        w_dist: f64,
        #[serde(default = "default_w_prob")]
        w_prob: f64,
        #[serde(default = "default_w_visited")]
        w_visited: f64,
    },
}

fn default_w_dist() -> f64 {
    1.0
}
fn default_w_prob() -> f64 {
    0.5
}
fn default_w_visited() -> f64 {
    0.5
}

impl Default for WeightsForm {
    fn default() -> Self {
        WeightsForm::Array([1.0, 0.5, 0.5])
    }
}

impl From<WeightsForm> for DijkstraWeights {
    fn from(w: WeightsForm) -> Self {
        match w {
            WeightsForm::Array([w_dist, w_prob, w_visited]) => DijkstraWeights {
                w_dist,
                w_prob,
                w_visited,
            },
            WeightsForm::Named {
                w_dist,
                w_prob,
                w_visited,
            } => DijkstraWeights {
                w_dist,
                w_prob,
                w_visited,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_builtins_by_name() {
        let reg = PlannerRegistry::with_builtins();
        assert_eq!(
            reg.names(),
            vec!["dijkstra-query", "information-surfing", "lawnmower"]
        );
        for name in reg.names() {
            let p = reg.build(&PlannerSpec::named(name)).unwrap();
            assert_eq!(p.name(), name);
        }
    }

    #[test]
    fn unknown_kind_lists_options() {
        let reg = PlannerRegistry::with_builtins();
        let msg = match reg.build(&PlannerSpec::named("zigzag")) {
            Err(e) => e.to_string(),
            Ok(_) => panic!("unknown kind must not build"),
        };
        assert!(msg.contains("zigzag") && msg.contains("lawnmower"), "{msg}");
    }

    #[test]
    fn params_parse_and_reject_typos() {
        let reg = PlannerRegistry::with_builtins();
        let spec: PlannerSpec =
            serde_json::from_str("{\"kind\":\"information-surfing\",\"blur_radius\":2}").unwrap();
        assert!(reg.build(&spec).is_ok());

        let spec: PlannerSpec =
            serde_json::from_str("{\"kind\":\"dijkstra-query\",\"weights\":[1.0,0.0,0.0]}")
                .unwrap();
        assert!(reg.build(&spec).is_ok());

        let spec: PlannerSpec = serde_json::from_str(
            "{\"kind\":\"dijkstra-query\",\"weights\":{\"w_prob\":0.7}}",
        )
        .unwrap();
        assert!(reg.build(&spec).is_ok());

        let spec: PlannerSpec =
            serde_json::from_str("{\"kind\":\"information-surfing\",\"blur\":2}").unwrap();
        assert!(reg.build(&spec).is_err());
    }

    #[test]
    fn external_planners_can_register() {
        struct SitStill;
        impl Planner for SitStill {
            fn name(&self) -> &'static str {
                "sit-still"
            }
            fn connectivity(&self) -> Connectivity {
                Connectivity::Four
            }
            fn next_step(&self, _obs: &Observation) -> PlanStep {
                PlanStep::CoverageComplete
            }
        }
        let mut reg = PlannerRegistry::with_builtins();
        reg.register("sit-still", |_| Ok(Box::new(SitStill)));
        let p = reg.build(&PlannerSpec::named("sit-still")).unwrap();
        assert_eq!(p.name(), "sit-still");
    }

    #[test]
    fn normalized_belief_sums_to_one() {
        let map = ScoreMap::new(2, vec![0.2, 0.4, 0.1, 0.3]).unwrap();
        let visited = vec![false; 4];
        let obs = Observation {
            position: 0,
            visited: &visited,
            belief: &map,
            remaining_budget: 10,
        };
        let norm = obs.normalized_belief();
        assert!((norm.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let zero = ScoreMap::uniform(2, 0.0).unwrap();
        let obs = Observation {
            position: 0,
            visited: &visited,
            belief: &zero,
            remaining_budget: 10,
        };
        assert_eq!(obs.normalized_belief(), vec![0.25; 4]);
    }
}
