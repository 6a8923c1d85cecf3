//! Episode and suite configuration schemas (JSON via serde).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::adapt::TtaConfig;
use crate::error::{Error, Result};
use crate::plan::PlannerSpec;
use crate::priors::ScenarioParams;

/// Where an episode's world comes from: generated on the fly, or loaded
/// from files produced earlier (e.g. by `gen-scenarios`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldSource {
    /// Generate a scenario from parameters. The episode seed replaces the
    /// `seed` field inside, so one number drives the whole episode.
    Synth(ScenarioParams),
    Files {
        world: PathBuf,
        base_map: PathBuf,
        #[serde(default)]
        features: Option<PathBuf>,
    },
}

/// Starting cell policy. `random` draws uniformly from the grid using the
/// episode seed; planners may still override it (recorded in the result).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    #[default]
    Random,
    Cell(usize),
}

pub const DEFAULT_BUDGET: usize = 256;

pub fn default_budget() -> usize {
    DEFAULT_BUDGET
}

pub fn default_checkpoints() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

/// Everything needed to run one episode deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub world: WorldSource,
    pub planner: PlannerSpec,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub start: StartSpec,
    /// Fractions of the budget at which belief-vs-truth error is recorded.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
    /// `null` (or absent) disables test-time adaptation entirely.
    #[serde(default)]
    pub tta: Option<TtaConfig>,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        for &f in &self.checkpoints {
            if !(0.0..=1.0).contains(&f) || !f.is_finite() {
                return Err(Error::Config(format!(
                    "checkpoint fraction {f} outside [0,1]"
                )));
            }
        }
        if let WorldSource::Synth(params) = &self.world {
            params.validate()?;
        }
        if let Some(tta) = &self.tta {
            tta.validate()?;
        }
        Ok(())
    }
}

/// Which side of the paired comparison an episode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Tta,
    NoTta,
}

impl Arm {
    pub fn label(self) -> &'static str {
        match self {
            Arm::Tta => "tta",
            Arm::NoTta => "no_tta",
        }
    }
}

fn default_arms() -> Vec<Arm> {
    vec![Arm::Tta, Arm::NoTta]
}

fn default_fractions() -> Vec<f64> {
    vec![0.05, 0.02]
}

/// A named episode template; the suite crosses it with every seed and arm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteTemplate {
    pub name: String,
    pub world: WorldSource,
    pub planner: PlannerSpec,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
    /// Adaptation settings used by the `tta` arm (the `no_tta` arm ignores it).
    #[serde(default)]
    pub tta: TtaConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub templates: Vec<SuiteTemplate>,
    pub seeds: SeedRange,
    #[serde(default = "default_arms")]
    pub arms: Vec<Arm>,
    /// Quality-percentile buckets reported per template/arm.
    #[serde(default = "default_fractions")]
    pub percentile_fractions: Vec<f64>,
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty() {
            return Err(Error::Config("suite has no templates".into()));
        }
        if self.seeds.count == 0 {
            return Err(Error::Config("suite seed count must be at least 1".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::Config("suite has no arms".into()));
        }
        let mut names: Vec<&str> = self.templates.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.templates.len() {
            return Err(Error::Config("duplicate template names".into()));
        }
        for t in &self.templates {
            let episode = EpisodeConfig {
                world: t.world.clone(),
                planner: t.planner.clone(),
                budget: t.budget,
                start: t.start,
                checkpoints: t.checkpoints.clone(),
                tta: Some(t.tta.clone()),
                seed: self.seeds.start,
            };
            episode.validate()?;
        }
        for &f in &self.percentile_fractions {
            if !(0.0 < f && f <= 1.0) {
                return Err(Error::Config(format!(
                    "percentile fraction {f} outside (0,1]"
                )));
            }
        }
        Ok(())
    }

    /// Expand templates × seeds × arms into concrete episode configs, in
    /// deterministic order. Returns (id, template name, arm, config).
    pub fn expand(&self) -> Vec<(String, String, Arm, EpisodeConfig)> {
        let mut out = Vec::new();
        for t in &self.templates {
            for seed in self.seeds.start..self.seeds.start + self.seeds.count {
                for &arm in &self.arms {
                    let id = format!("{}:{}:{seed:06}", t.name, arm.label());
                    let cfg = EpisodeConfig {
                        world: t.world.clone(),
                        planner: t.planner.clone(),
                        budget: t.budget,
                        start: t.start,
                        checkpoints: t.checkpoints.clone(),
                        tta: match arm {
                            Arm::Tta => Some(t.tta.clone()),
                            Arm::NoTta => None,
                        },
                        seed,
                    };
                    out.push((id, t.name.clone(), arm, cfg));
                }
            }
        }
        out
    }
}
