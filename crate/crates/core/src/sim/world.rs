use std::collections::HashSet;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::{Algorithm, PriorMean};
use super::metrics::{ledger_account, rmse, MessageLedger, MetricsRow, RoundMessages};
use super::setup::{derive_seed, ExperimentSetup, TAG_NOISE, TAG_PLACEMENT};
use crate::active::{
    centralized_joint_walk, joint_space_size, max_entropy_joint_walk, CoordinationState,
    FusedJointModel, JointWalkModel, PosteriorJointModel, WalkSet,
};
use crate::error::{Error, Result};
use crate::fusion::{
    decode_summary, encode_summary, global_summary, local_summary, FusedPredictor, FusionContext,
};
use crate::gp::{gp_posterior, greedy_select, posterior_mean, sod_posterior, ObservationSet};
use crate::road_kernel::EmbeddedKernel;

/// One mobile sensor: where it is and what it has measured.
#[derive(Clone, Debug)]
pub struct SensorState {
    pub id: usize,
    pub position: usize,
    pub observations: ObservationSet,
    rng: ChaCha8Rng,
}

/// One run: sensors, their readings and the remaining budget, on top of a
/// shared [`ExperimentSetup`].
#[derive(Clone, Debug)]
pub struct WorldState<'a> {
    setup: &'a ExperimentSetup,
    /// The setup's kernel, re-centred on the readings when the prior mean
    /// is empirical.
    kernel: EmbeddedKernel,
    algorithm: Algorithm,
    walk_length: usize,
    seed: u64,
    sensors: Vec<SensorState>,
    observed: HashSet<usize>,
    readings: usize,
    remaining: usize,
    round: usize,
    idle_rounds: usize,
    noise: Normal<f64>,
}

/// The outcome of planning a round, before any sensor moves.
#[derive(Clone, Debug)]
pub struct RoundPlan {
    pub walk_sets: Vec<WalkSet>,
    pub choice: Vec<usize>,
    pub kappa: usize,
    pub ledger: MessageLedger,
    pub agent_time: Duration,
}

/// Places `sensors` sensors on distinct segments drawn from `seed`; each
/// reads its starting segment while the budget lasts.
pub fn init_world(
    setup: &ExperimentSetup,
    algorithm: Algorithm,
    sensors: usize,
    walk_length: usize,
    seed: u64,
) -> Result<WorldState<'_>> {
    let n = setup.network.len();
    if sensors == 0 || sensors > n {
        return Err(Error::Config(format!(
            "cannot place {sensors} sensors on {n} segments"
        )));
    }
    if walk_length == 0 {
        return Err(Error::Config("walk length must be positive".into()));
    }
    let base = setup.base_seed;
    let gt = setup.config.ground_truth_seed;
    let mut placement = ChaCha8Rng::seed_from_u64(derive_seed(&[
        base,
        gt,
        TAG_PLACEMENT,
        seed,
        sensors as u64,
    ]));
    let origins = sample(&mut placement, n, sensors).into_vec();
    let noise =
        Normal::new(0.0, setup.config.sigma_n2.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let mut world = WorldState {
        setup,
        kernel: setup.kernel.clone(),
        algorithm,
        walk_length,
        seed,
        sensors: origins
            .into_iter()
            .enumerate()
            .map(|(id, position)| SensorState {
                id,
                position,
                observations: ObservationSet::empty(),
                rng: ChaCha8Rng::seed_from_u64(derive_seed(&[
                    base, gt, TAG_NOISE, seed, id as u64,
                ])),
            })
            .collect(),
        observed: HashSet::new(),
        readings: 0,
        remaining: setup.config.budget,
        round: 0,
        idle_rounds: 0,
        noise,
    };
    for k in 0..sensors {
        let s = world.sensors[k].position;
        world.read(k, s)?;
    }
    world.recentre();
    Ok(world)
}

impl<'a> WorldState<'a> {
    pub fn setup(&self) -> &'a ExperimentSetup {
        self.setup
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn sensors(&self) -> &[SensorState] {
        &self.sensors
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn remaining_budget(&self) -> usize {
        self.remaining
    }

    /// Readings taken so far, counting repeats by different sensors.
    pub fn readings(&self) -> usize {
        self.readings
    }

    pub fn observed(&self) -> &HashSet<usize> {
        &self.observed
    }

    pub fn is_finished(&self) -> bool {
        let cfg = &self.setup.config;
        self.remaining == 0
            || self.idle_rounds >= cfg.max_idle_rounds.max(1)
            || cfg.max_rounds.is_some_and(|m| self.round >= m)
    }

    /// All readings of all sensors, in sensor order.
    pub fn pooled(&self) -> ObservationSet {
        ObservationSet::pooled(self.sensors.iter().map(|s| &s.observations))
    }

    fn read(&mut self, k: usize, s: usize) -> Result<bool> {
        if self.remaining == 0 {
            return Ok(false);
        }
        let sensor = &mut self.sensors[k];
        let z = self.setup.truth[s] + self.noise.sample(&mut sensor.rng);
        sensor.observations.push(s, z)?;
        self.observed.insert(s);
        self.readings += 1;
        self.remaining -= 1;
        Ok(true)
    }

    fn empirical_mean(&self) -> bool {
        matches!(self.setup.config.prior_mean, PriorMean::Keyword(_))
    }

    fn recentre(&mut self) {
        if self.empirical_mean() {
            let mean = self
                .pooled()
                .mean_value()
                .unwrap_or(self.setup.config.prior_mean_fallback);
            self.kernel = self.setup.kernel.with_mean(mean);
        }
    }

    /// Model kernel used for the next fusion.
    pub fn kernel(&self) -> &EmbeddedKernel {
        &self.kernel
    }

    fn walk_sets(&self) -> Result<Vec<WalkSet>> {
        self.sensors
            .iter()
            .map(|s| {
                WalkSet::new(
                    &self.setup.network,
                    s.id,
                    s.position,
                    self.walk_length,
                    &self.observed,
                )
            })
            .collect()
    }

    fn fusion_context(&self) -> Result<FusionContext<'_>> {
        FusionContext::new(&self.kernel, &self.setup.support)
    }

    /// Every sensor builds and broadcasts its local summary; after the
    /// exchange each one assembles the same predictor. Returns the per-agent
    /// time, including the shared assembly.
    fn fuse<'c>(&self, ctx: &FusionContext<'c>) -> Result<(FusedPredictor<'c>, Vec<Duration>)> {
        let messages = self
            .sensors
            .par_iter()
            .map(|s| {
                let t = Instant::now();
                let summary = local_summary(ctx, s.id as u64, &s.observations)?;
                Ok((encode_summary(&summary), t.elapsed()))
            })
            .collect::<Result<Vec<_>>>()?;
        let t = Instant::now();
        let received = messages
            .iter()
            .map(|(bytes, _)| decode_summary(bytes, ctx.support()))
            .collect::<Result<Vec<_>>>()?;
        let predictor = FusedPredictor::new(ctx, &global_summary(ctx, &received)?)?;
        let shared = t.elapsed();
        Ok((
            predictor,
            messages.iter().map(|(_, d)| *d + shared).collect(),
        ))
    }

    fn sod_subset(&self, pooled: &ObservationSet) -> Result<Vec<usize>> {
        let mut distinct: Vec<usize> = self.observed.iter().copied().collect();
        distinct.sort_unstable();
        let m = self.setup.config.support_size.min(distinct.len());
        let mut subset = greedy_select(&self.kernel, &distinct, m)?;
        subset.sort_unstable();
        debug_assert!(subset.iter().all(|s| pooled.contains(*s)));
        Ok(subset)
    }

    /// Predictive mean on every segment under the run's algorithm.
    pub fn predict_all(&self) -> Result<DVector<f64>> {
        let all: Vec<usize> = (0..self.setup.network.len()).collect();
        let kernel = &self.kernel;
        match self.algorithm {
            Algorithm::D2fas => {
                let ctx = self.fusion_context()?;
                let (predictor, _) = self.fuse(&ctx)?;
                predictor.mean(&all)
            }
            Algorithm::Fgp => posterior_mean(kernel, &self.pooled(), &all),
            Algorithm::Sod => {
                let pooled = self.pooled();
                let subset = self.sod_subset(&pooled)?;
                posterior_mean(kernel, &pooled.restricted_to(&subset), &all)
            }
        }
    }

    pub fn rmse(&self) -> Result<f64> {
        rmse(self.predict_all()?.as_slice(), self.setup.truth.as_slice())
    }

    /// Fused predictor, joint-walk model and coordination graph as every
    /// sensor sees them at the start of the next round.
    pub fn fused_planning_state(&self) -> Result<(FusedJointModel, CoordinationState)> {
        let ctx = self.fusion_context()?;
        let (predictor, _) = self.fuse(&ctx)?;
        let model = FusedJointModel::new(&predictor, self.walk_sets()?)?;
        let coordination = model.coordination(self.setup.config.epsilon);
        Ok((model, coordination))
    }

    /// Fuse and choose walks for every sensor.
    pub fn plan(&self) -> Result<RoundPlan> {
        let budget = self.setup.config.walk_search_budget;
        match self.algorithm {
            Algorithm::D2fas => {
                let ctx = self.fusion_context()?;
                let (predictor, fusion_times) = self.fuse(&ctx)?;
                let t = Instant::now();
                let model = FusedJointModel::new(&predictor, self.walk_sets()?)?;
                let coordination = model.coordination(self.setup.config.epsilon);
                let shared = t.elapsed();
                let groups = &coordination.components.groups;
                for g in groups {
                    let required = joint_space_size(&model, g);
                    if required > budget as u128 {
                        return Err(Error::SearchBudgetExceeded { required, budget });
                    }
                }
                let searched = groups
                    .par_iter()
                    .map(|g| {
                        let t = Instant::now();
                        let plan = max_entropy_joint_walk(&model, g, budget)?;
                        Ok((plan, t.elapsed()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut choice = vec![0; self.sensors.len()];
                let mut agent = fusion_times;
                for (plan, elapsed) in &searched {
                    for (&k, &w) in plan.sensors.iter().zip(&plan.choice) {
                        choice[k] = w;
                        agent[k] += shared + *elapsed;
                    }
                }
                let candidates: Vec<usize> = model
                    .walk_sets()
                    .iter()
                    .map(|w| w.candidates.len())
                    .collect();
                let ledger = ledger_account(&RoundMessages::Summaries {
                    sensors: self.sensors.len(),
                    support_len: self.setup.support.len(),
                    candidates: &candidates,
                    shared_mean: self.empirical_mean(),
                });
                Ok(RoundPlan {
                    walk_sets: model.walk_sets().to_vec(),
                    choice,
                    kappa: coordination.kappa(),
                    ledger,
                    agent_time: agent.into_iter().max().unwrap_or_default(),
                })
            }
            Algorithm::Fgp | Algorithm::Sod => {
                let t = Instant::now();
                let pooled = self.pooled();
                let kernel = &self.kernel;
                let walk_sets = self.walk_sets()?;
                let model = match self.algorithm {
                    Algorithm::Fgp => {
                        PosteriorJointModel::new(walk_sets, kernel.signal_variance(), |union| {
                            Ok(gp_posterior(kernel, &pooled, union)?.cov)
                        })?
                    }
                    _ => {
                        let subset = self.sod_subset(&pooled)?;
                        PosteriorJointModel::new(walk_sets, kernel.signal_variance(), |union| {
                            Ok(sod_posterior(kernel, &pooled, &subset, union)?.cov)
                        })?
                    }
                };
                let best = centralized_joint_walk(&model, budget)?;
                let local_sizes: Vec<usize> =
                    self.sensors.iter().map(|s| s.observations.len()).collect();
                Ok(RoundPlan {
                    walk_sets: model.walk_sets().to_vec(),
                    choice: best.choice,
                    kappa: self.sensors.len(),
                    ledger: ledger_account(&RoundMessages::RawData {
                        local_sizes: &local_sizes,
                    }),
                    agent_time: t.elapsed(),
                })
            }
        }
    }

    /// Sensors walk their chosen walks in id order, reading every segment
    /// that was unobserved when the round began. A sensor that meets such a
    /// segment after the budget has run out stops just before it.
    pub fn execute(&mut self, plan: &RoundPlan) -> Result<usize> {
        let mut added = 0;
        for (k, ws) in plan.walk_sets.iter().enumerate() {
            let w = plan.choice[k];
            let mut unread = ws.induced_segments(w);
            for &s in &ws.walks[w].steps {
                if let Ok(i) = unread.binary_search(&s) {
                    unread.remove(i);
                    if !self.read(k, s)? {
                        break;
                    }
                    added += 1;
                }
                self.sensors[k].position = s;
            }
        }
        self.recentre();
        Ok(added)
    }

    fn row(
        &self,
        rmse: f64,
        kappa: usize,
        agent_time: Option<Duration>,
        ledger: MessageLedger,
    ) -> MetricsRow {
        MetricsRow {
            algorithm: self.algorithm,
            sensors: self.sensors.len(),
            walk_length: self.walk_length,
            seed: self.seed,
            round: self.round,
            observations: self.readings,
            observed_segments: self.observed.len(),
            rmse,
            kappa,
            max_agent_ms: agent_time
                .filter(|_| self.setup.config.record_timing)
                .map(|d| d.as_secs_f64() * 1e3),
            payload_scalars: ledger.payload_scalars(),
            adjacency_bits: ledger.adjacency_bits,
        }
    }

    /// Metrics before any sensor has moved.
    pub fn initial_row(&self) -> Result<MetricsRow> {
        Ok(self.row(self.rmse()?, 0, None, MessageLedger::default()))
    }

    /// One full round: fuse, plan, move and read, then evaluate.
    pub fn step_round(&mut self) -> Result<MetricsRow> {
        if self.is_finished() {
            return Err(Error::Config("the run has already finished".into()));
        }
        let plan = self.plan()?;
        let added = self.execute(&plan)?;
        self.round += 1;
        self.idle_rounds = if added == 0 { self.idle_rounds + 1 } else { 0 };
        Ok(self.row(self.rmse()?, plan.kappa, Some(plan.agent_time), plan.ledger))
    }

    /// Initial row followed by one row per round until the run finishes.
    pub fn run(mut self) -> Result<Vec<MetricsRow>> {
        let mut rows = vec![self.initial_row()?];
        while !self.is_finished() {
            rows.push(self.step_round()?);
        }
        Ok(rows)
    }
}
