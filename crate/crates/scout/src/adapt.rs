//! Online belief refinement: a spatial-point-process log-likelihood over
//! the accumulated measurements, maximized one ascent step at a time.
//!
//! The model keeps the starting map frozen as per-cell logits and learns a
//! single offset per region, so the whole surface moves region-by-region:
//! λ(x) = sigmoid(base_logit(x) + offset(region(x))). Positive sensings pull
//! their region up with constant weight; negative sensings push it down with
//! a weight that grows with how much of that region has been covered —
//! sparse early negatives can't collapse a belief mode by themselves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CellId;
use crate::priors::ScoreMap;
use crate::regions::RegionPartition;
use crate::world::Measurement;

/// Base scores are clamped into [ε, 1−ε] before the logit so 0 and 1 stay
/// finite.
pub const EPSILON_CLAMP: f64 = 1e-4;

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(sigmoid(x)) without the catastrophic cancellation of composing the two.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP);
    (p / (1.0 - p)).ln()
}

/// Frozen base logits plus one learnable offset per region.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityModel {
    side: usize,
    base_logits: Vec<f64>,
    offsets: Vec<f64>,
    partition: RegionPartition,
    /// Optimizer accumulators; populated only while `reset_to_base` is off
    /// and the optimizer is Adam.
    opt: Option<AdamState>,
}

#[derive(Debug, Clone, PartialEq)]
struct AdamState {
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl IntensityModel {
    pub fn new(base: &ScoreMap, partition: &RegionPartition) -> Result<Self> {
        if base.len() != partition.num_cells() {
            return Err(Error::Bounds(format!(
                "base map has {} cells but partition covers {}",
                base.len(),
                partition.num_cells()
            )));
        }
        Ok(IntensityModel {
            side: base.side(),
            base_logits: base.values().iter().map(|&p| logit(p)).collect(),
            offsets: vec![0.0; partition.k()],
            partition: partition.clone(),
            opt: None,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn num_cells(&self) -> usize {
        self.base_logits.len()
    }

    pub fn partition(&self) -> &RegionPartition {
        &self.partition
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Same model with replaced offsets; used by gradient verification.
    pub fn with_offsets(&self, offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() != self.partition.k() {
            return Err(Error::Bounds(format!(
                "expected {} offsets, got {}",
                self.partition.k(),
                offsets.len()
            )));
        }
        if let Some(bad) = offsets.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite offset {bad}")));
        }
        Ok(IntensityModel {
            offsets,
            opt: None,
            ..self.clone()
        })
    }

    fn z(&self, cell: CellId) -> f64 {
        self.base_logits[cell] + self.offsets[self.partition.label_of(cell)]
    }

    /// Adapted intensity at one cell, always in (0,1).
    pub fn lambda(&self, cell: CellId) -> f64 {
        sigmoid(self.z(cell))
    }

    /// Whole adapted surface as a score map.
    pub fn lambda_map(&self) -> ScoreMap {
        let values = (0..self.num_cells()).map(|c| self.lambda(c)).collect();
        ScoreMap::new(self.side, values).expect("sigmoid output is in (0,1)")
    }

    /// Audit dump of the learnable state.
    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            base_logits: self.base_logits.clone(),
            offsets: self.offsets.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub base_logits: Vec<f64>,
    pub offsets: Vec<f64>,
}

/// Dedup-by-cell record of everything sensed so far, with per-region
/// coverage counters O_r feeding the negative-weight law.
#[derive(Debug, Clone)]
pub struct MeasurementLog {
    labels: Vec<usize>,
    region_sizes: Vec<usize>,
    seen: Vec<bool>,
    entries: Vec<Measurement>,
    o_r: Vec<usize>,
    positives: usize,
    negatives: usize,
}

impl MeasurementLog {
    pub fn new(partition: &RegionPartition) -> Self {
        MeasurementLog {
            labels: partition.labels().to_vec(),
            region_sizes: partition.region_sizes().to_vec(),
            seen: vec![false; partition.num_cells()],
            entries: Vec::new(),
            o_r: vec![0; partition.k()],
            positives: 0,
            negatives: 0,
        }
    }

    /// Record a measurement. Returns true if the cell was newly sensed;
    /// repeat sensings of a cell are dropped (the sensor is deterministic,
    /// duplicates would only rescale the likelihood).
    pub fn record(&mut self, m: Measurement) -> Result<bool> {
        if m.cell >= self.seen.len() {
            return Err(Error::Bounds(format!(
                "measurement cell {} outside the {}-cell partition",
                m.cell,
                self.seen.len()
            )));
        }
        if self.seen[m.cell] {
            return Ok(false);
        }
        self.seen[m.cell] = true;
        self.o_r[self.labels[m.cell]] += 1;
        if m.is_positive() {
            self.positives += 1;
        } else {
            self.negatives += 1;
        }
        self.entries.push(m);
        Ok(true)
    }

    pub fn is_sensed(&self, cell: CellId) -> bool {
        self.seen[cell]
    }

    pub fn entries(&self) -> &[Measurement] {
        &self.entries
    }

    /// Observed-cell count per region.
    pub fn o_r(&self) -> &[usize] {
        &self.o_r
    }

    pub fn region_sizes(&self) -> &[usize] {
        &self.region_sizes
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn negatives(&self) -> usize {
        self.negatives
    }

    pub fn distinct_sensed(&self) -> usize {
        self.positives + self.negatives
    }

    pub fn num_cells(&self) -> usize {
        self.seen.len()
    }
}

/// Which update rule turns the gradient into a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain gradient ascent: θ ← θ + lr·∇L. The default — the step size
    /// then scales with the gradient, which is what makes the
    /// coverage-weighted negative law observable in λ space.
    #[default]
    Sgd,
    /// Adam ascent. Selectable for parity with encoder-scale training, but
    /// note its per-parameter normalization largely erases the *magnitude*
    /// differences the negative-weight law is designed to produce.
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Every knob of the adaptive update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TtaConfig {
    /// Weight of each positive cell in the likelihood.
    pub alpha_pos: f64,
    /// Scale β of the negative weight min(β·(O_r/L_r)^γ, 1).
    pub beta: f64,
    /// Coverage exponent γ of the negative weight.
    pub gamma_exp: f64,
    /// Learning-rate range, interpolated linearly in global coverage.
    /// Defaults suit the per-region offset parameterization; 1e-6..1e-5
    /// reproduces encoder-scale schedules.
    pub lr_min: f64,
    pub lr_max: f64,
    pub optimizer: OptimizerKind,
    pub adam: AdamParams,
    /// Ascent steps per update event.
    pub steps_per_event: usize,
    /// Scheduled update period, in agent steps.
    pub cadence: usize,
    /// Re-zero the offsets (and optimizer state) before each event, so every
    /// update re-fits the full log from the base map.
    pub reset_to_base: bool,
}

impl Default for TtaConfig {
    fn default() -> Self {
        TtaConfig {
            alpha_pos: 4.0,
            beta: 1.0 / 9.0,
            gamma_exp: 2.0,
            lr_min: 0.1,
            lr_max: 1.0,
            optimizer: OptimizerKind::Sgd,
            adam: AdamParams::default(),
            steps_per_event: 1,
            cadence: 20,
            reset_to_base: true,
        }
    }
}

impl TtaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_min.is_finite() && self.lr_max.is_finite() && self.lr_min <= self.lr_max) {
            return Err(Error::Config(format!(
                "need lr_min ≤ lr_max, got {} > {}",
                self.lr_min, self.lr_max
            )));
        }
        if self.alpha_pos <= 0.0 {
            return Err(Error::Config("alpha_pos must be > 0".into()));
        }
        if self.beta <= 0.0 {
            return Err(Error::Config("beta must be > 0".into()));
        }
        if self.gamma_exp < 0.0 {
            return Err(Error::Config("gamma_exp must be ≥ 0".into()));
        }
        if self.cadence == 0 {
            return Err(Error::Config("cadence must be ≥ 1".into()));
        }
        if self.steps_per_event == 0 {
            return Err(Error::Config("steps_per_event must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Weight of a negative cell in region r: min(β·(O_r/L_r)^γ, 1), with
/// 0^0 = 1 so γ = 0 means a flat β (capped at 1).
pub fn alpha_neg(o_r: usize, l_r: usize, beta: f64, gamma_exp: f64) -> Result<f64> {
    if l_r == 0 {
        return Err(Error::Degenerate(
            "negative weight undefined for an empty region".into(),
        ));
    }
    if o_r > l_r {
        return Err(Error::Bounds(format!(
            "observed count {o_r} exceeds region size {l_r}"
        )));
    }
    let ratio = o_r as f64 / l_r as f64;
    Ok((beta * ratio.powf(gamma_exp)).min(1.0))
}

fn alpha_neg_per_region(log: &MeasurementLog, cfg: &TtaConfig) -> Result<Vec<f64>> {
    log.o_r()
        .iter()
        .zip(log.region_sizes())
        .map(|(&o, &l)| alpha_neg(o, l, cfg.beta, cfg.gamma_exp))
        .collect()
}

/// Point-process log-likelihood of the log under the model:
/// Σ_pos α_pos·ln λ(x) − Σ_neg α_neg(region(x))·λ(x), unit cell area.
/// Negative weights use the log's *current* coverage for every entry.
pub fn log_likelihood(model: &IntensityModel, log: &MeasurementLog, cfg: &TtaConfig) -> Result<f64> {
    check_same_cells(model, log)?;
    let alphas = alpha_neg_per_region(log, cfg)?;
    let mut loss = 0.0;
    for m in log.entries() {
        let z = model.z(m.cell);
        if m.is_positive() {
            loss += cfg.alpha_pos * log_sigmoid(z);
        } else {
            loss -= alphas[model.partition.label_of(m.cell)] * sigmoid(z);
        }
    }
    Ok(loss)
}

/// Analytic ∂loss/∂offset_r:
/// Σ_{pos∩r} α_pos·(1−λ) − Σ_{neg∩r} α_neg,r·λ·(1−λ).
pub fn log_likelihood_grad(model: &IntensityModel, log: &MeasurementLog, cfg: &TtaConfig) -> Result<Vec<f64>> {
    check_same_cells(model, log)?;
    let alphas = alpha_neg_per_region(log, cfg)?;
    let mut grad = vec![0.0; model.partition.k()];
    for m in log.entries() {
        let r = model.partition.label_of(m.cell);
        let lam = model.lambda(m.cell);
        if m.is_positive() {
            grad[r] += cfg.alpha_pos * (1.0 - lam);
        } else {
            grad[r] -= alphas[r] * lam * (1.0 - lam);
        }
    }
    Ok(grad)
}

fn check_same_cells(model: &IntensityModel, log: &MeasurementLog) -> Result<()> {
    if model.num_cells() != log.num_cells() {
        return Err(Error::Bounds(format!(
            "model covers {} cells but log covers {}",
            model.num_cells(),
            log.num_cells()
        )));
    }
    Ok(())
}

/// Learning rate linear in fraction of the grid sensed so far.
pub fn lr_schedule(distinct_sensed: usize, n_cells: usize, cfg: &TtaConfig) -> f64 {
    let coverage = distinct_sensed as f64 / n_cells as f64;
    cfg.lr_min + coverage * (cfg.lr_max - cfg.lr_min)
}

/// One adaptation event: optionally reset to base, then `steps_per_event`
/// ascent steps on the full accumulated log at the scheduled rate. Returns
/// the updated model; the input is untouched.
pub fn tta_update(
    model: &IntensityModel,
    log: &MeasurementLog,
    cfg: &TtaConfig,
) -> Result<IntensityModel> {
    cfg.validate()?;
    check_same_cells(model, log)?;
    let mut next = model.clone();
    if cfg.reset_to_base {
        next.offsets.fill(0.0);
        next.opt = None;
    }
    let lr = lr_schedule(log.distinct_sensed(), log.num_cells(), cfg);
    for _ in 0..cfg.steps_per_event {
        let grad = log_likelihood_grad(&next, log, cfg)?;
        if let Some(bad) = grad.iter().find(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient component {bad}"
            )));
        }
        match cfg.optimizer {
            OptimizerKind::Sgd => {
                for (o, g) in next.offsets.iter_mut().zip(&grad) {
                    *o += lr * g;
                }
            }
            OptimizerKind::Adam => {
                let k = next.offsets.len();
                let state = next.opt.get_or_insert_with(|| AdamState {
                    t: 0,
                    m: vec![0.0; k],
                    v: vec![0.0; k],
                });
                state.t += 1;
                let (b1, b2, eps) = (cfg.adam.beta1, cfg.adam.beta2, cfg.adam.epsilon);
                let bc1 = 1.0 - b1.powi(state.t as i32);
                let bc2 = 1.0 - b2.powi(state.t as i32);
                for (i, &g) in grad.iter().enumerate() {
                    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
                    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
                    let m_hat = state.m[i] / bc1;
                    let v_hat = state.v[i] / bc2;
                    next.offsets[i] += lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Measurement;

    fn halves_partition(n: usize) -> RegionPartition {
        // left half region 0, right half region 1
        let labels = (0..n * n).map(|c| usize::from(c % n >= n / 2)).collect();
        RegionPartition::new(2, labels).unwrap()
    }

    fn model_with_base(n: usize, base: f64) -> IntensityModel {
        let map = ScoreMap::uniform(n, base).unwrap();
        IntensityModel::new(&map, &halves_partition(n)).unwrap()
    }

    fn neg(cell: usize, step: usize) -> Measurement {
        Measurement {
            cell,
            positive_count: 0,
            step,
        }
    }

    fn pos(cell: usize, step: usize) -> Measurement {
        Measurement {
            cell,
            positive_count: 1,
            step,
        }
    }

    #[test]
    fn alpha_neg_closed_forms() {
        let b = 1.0 / 9.0;
        assert_eq!(alpha_neg(0, 10, b, 2.0).unwrap(), 0.0);
        assert_eq!(alpha_neg(10, 10, b, 2.0).unwrap(), b);
        assert_eq!(alpha_neg(5, 10, b, 2.0).unwrap(), b * 0.25);
        // 0^0 = 1: zero coverage with γ=0 still contributes β
        assert_eq!(alpha_neg(0, 10, b, 0.0).unwrap(), b);
        // cap at 1
        assert_eq!(alpha_neg(10, 10, 3.0, 0.0).unwrap(), 1.0);
        assert!(alpha_neg(1, 0, b, 2.0).is_err());
        assert!(alpha_neg(11, 10, b, 2.0).is_err());
    }

    #[test]
    fn loss_closed_forms() {
        let cfg = TtaConfig::default();
        let model = model_with_base(4, 0.5);
        let mut log = MeasurementLog::new(model.partition());

        // empty log
        assert_eq!(log_likelihood(&model, &log, &cfg).unwrap(), 0.0);

        // one positive at λ = 0.5 with α_pos = 4 → 4·ln(0.5)
        log.record(pos(0, 0)).unwrap();
        let loss = log_likelihood(&model, &log, &cfg).unwrap();
        assert!((loss - 4.0 * 0.5f64.ln()).abs() < 1e-12, "got {loss}");
        assert!((loss + 2.772588722239781).abs() < 1e-12);
    }

    #[test]
    fn loss_negative_fully_covered_region() {
        let cfg = TtaConfig::default();
        // 2×2 grid: region 0 = {0}, region 1 = {1,2,3}; λ = 0.9 everywhere
        let labels = vec![0, 1, 1, 1];
        let part = RegionPartition::new(2, labels).unwrap();
        let map = ScoreMap::uniform(2, 0.9).unwrap();
        let model = IntensityModel::new(&map, &part).unwrap();
        let mut log = MeasurementLog::new(&part);
        log.record(neg(0, 0)).unwrap(); // region 0 now fully covered
        let loss = log_likelihood(&model, &log, &cfg).unwrap();
        // α_neg = min((1/9)·1², 1) = 1/9, λ ≈ 0.9 → loss ≈ −0.1
        assert!((loss + 0.1).abs() < 1e-12, "got {loss}");
    }

    #[test]
    fn grad_closed_form_single_positive() {
        let cfg = TtaConfig::default();
        let model = model_with_base(4, 0.5);
        let mut log = MeasurementLog::new(model.partition());
        log.record(pos(0, 0)).unwrap(); // col 0 → region 0
        let g = log_likelihood_grad(&model, &log, &cfg).unwrap();
        assert_eq!(g, vec![2.0, 0.0]); // 4·(1−0.5) exactly
    }

    #[test]
    fn log_dedups_and_counts() {
        let part = halves_partition(4);
        let mut log = MeasurementLog::new(&part);
        assert!(log.record(pos(0, 0)).unwrap());
        assert!(!log.record(pos(0, 3)).unwrap()); // duplicate cell dropped
        assert!(log.record(neg(2, 1)).unwrap()); // col 2 → region 1
        assert_eq!(log.positives(), 1);
        assert_eq!(log.negatives(), 1);
        assert_eq!(log.distinct_sensed(), 2);
        assert_eq!(log.o_r(), &[1, 1]);
        assert!(log.record(neg(99, 1)).is_err());
    }

    #[test]
    fn lr_schedule_is_linear_in_coverage() {
        let cfg = TtaConfig::default();
        assert_eq!(lr_schedule(0, 576, &cfg), 0.1);
        assert_eq!(lr_schedule(576, 576, &cfg), 1.0);
        let paper_scale = TtaConfig {
            lr_min: 1e-6,
            lr_max: 1e-5,
            ..TtaConfig::default()
        };
        assert!((lr_schedule(288, 576, &paper_scale) - 5.5e-6).abs() < 1e-18);
    }

    #[test]
    fn empty_log_update_returns_base() {
        let cfg = TtaConfig::default();
        let model = model_with_base(4, 0.3);
        let log = MeasurementLog::new(model.partition());
        let updated = tta_update(&model, &log, &cfg).unwrap();
        assert_eq!(updated.lambda_map(), model.lambda_map());
    }

    #[test]
    fn zero_offsets_match_clamped_base() {
        let map = ScoreMap::new(2, vec![0.0, 0.25, 0.75, 1.0]).unwrap();
        let part = RegionPartition::new(2, vec![0, 0, 1, 1]).unwrap();
        let model = IntensityModel::new(&map, &part).unwrap();
        let lam = model.lambda_map();
        let expect = [
            EPSILON_CLAMP,
            0.25,
            0.75,
            1.0 - EPSILON_CLAMP,
        ];
        for (i, &e) in expect.iter().enumerate() {
            assert!(
                (lam.get(i) - e).abs() < 1e-12,
                "cell {i}: {} vs {e}",
                lam.get(i)
            );
        }
    }

    #[test]
    fn all_negative_region_falls_others_hold() {
        let cfg = TtaConfig::default();
        let model = model_with_base(4, 0.6);
        let mut log = MeasurementLog::new(model.partition());
        // negatives only in region 0 (columns 0–1)
        for &cell in &[0usize, 1, 4, 5] {
            log.record(neg(cell, 0)).unwrap();
        }
        let updated = tta_update(&model, &log, &cfg).unwrap();
        for cell in 0..16 {
            let before = model.lambda(cell);
            let after = updated.lambda(cell);
            if model.partition().label_of(cell) == 0 {
                assert!(after < before, "cell {cell} did not fall");
            } else {
                assert_eq!(after, before, "cell {cell} moved without evidence");
            }
        }
    }

    #[test]
    fn positive_lifts_negative_sinks_and_loss_improves() {
        let cfg = TtaConfig::default();
        for seed in 0..50u64 {
            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let values: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
            let map = ScoreMap::new(n, values).unwrap();
            let part = halves_partition(n);
            let model = IntensityModel::new(&map, &part).unwrap();
            let mut log = MeasurementLog::new(&part);
            // full coverage of region 1 with negatives, one positive in region 0
            for cell in 0..n * n {
                if part.label_of(cell) == 1 {
                    log.record(neg(cell, 0)).unwrap();
                }
            }
            log.record(pos(0, 1)).unwrap();

            let before = log_likelihood(&model, &log, &cfg).unwrap();
            let updated = tta_update(&model, &log, &cfg).unwrap();
            let after = log_likelihood(&updated, &log, &cfg).unwrap();
            assert!(
                after >= before,
                "seed {seed}: ascent step lowered the objective ({before} → {after})"
            );
            assert!(updated.offsets()[0] > 0.0);
            assert!(updated.offsets()[1] < 0.0);
        }
    }

    #[test]
    fn reset_makes_updates_idempotent() {
        let cfg = TtaConfig::default();
        let model = model_with_base(4, 0.4);
        let mut log = MeasurementLog::new(model.partition());
        log.record(pos(0, 0)).unwrap();
        log.record(neg(3, 1)).unwrap();
        let once = tta_update(&model, &log, &cfg).unwrap();
        let twice = tta_update(&once, &log, &cfg).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn coverage_weighting_monotone_in_lambda_space() {
        // Fixed negatives in region 0; more coverage ⇒ larger |Δλ| there.
        let cfg = TtaConfig::default();
        let n = 10; // region 0 = 50 cells (columns 0–4)
        let model = model_with_base(n, 0.5);
        let mut prev_drop = -1.0;
        for sensed in [5usize, 10, 20, 35, 50] {
            let mut log = MeasurementLog::new(model.partition());
            let mut added = 0;
            for cell in 0..n * n {
                if model.partition().label_of(cell) == 0 && added < sensed {
                    log.record(neg(cell, 0)).unwrap();
                    added += 1;
                }
            }
            let updated = tta_update(&model, &log, &cfg).unwrap();
            let drop = model.lambda(0) - updated.lambda(0);
            assert!(
                drop >= prev_drop,
                "coverage {sensed}: drop {drop} shrank below {prev_drop}"
            );
            prev_drop = drop;
        }
    }

    #[test]
    fn adam_state_requires_no_reset_to_persist() {
        let cfg = TtaConfig {
            optimizer: OptimizerKind::Adam,
            reset_to_base: false,
            ..TtaConfig::default()
        };
        let model = model_with_base(4, 0.5);
        let mut log = MeasurementLog::new(model.partition());
        log.record(neg(0, 0)).unwrap();
        let once = tta_update(&model, &log, &cfg).unwrap();
        let twice = tta_update(&once, &log, &cfg).unwrap();
        // without reset the offsets keep drifting
        assert!(twice.offsets()[0] < once.offsets()[0]);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let bad = TtaConfig {
            lr_min: 2.0,
            lr_max: 1.0,
            ..TtaConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TtaConfig {
            cadence: 0,
            ..TtaConfig::default()
        };
        assert!(bad.validate().is_err());
        // serde fills defaults and rejects unknown keys
        let cfg: TtaConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, TtaConfig::default());
        assert!(serde_json::from_str::<TtaConfig>("{\"cadense\": 10}").is_err());
    }
}
