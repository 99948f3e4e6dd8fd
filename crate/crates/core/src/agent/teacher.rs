use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ddpg::{AgentConfig, AgentNets};
use super::log::{EpisodeRecord, MetricsLog, StepRecord};
use super::noise::OuNoise;
use super::replay::{PoolInputs, ReplayBuffer, Transition};
use super::sampler::{reward, weighted_sample};
use crate::baselines::sparse_reward;
use crate::error::{Error, Result};
use crate::ktrace::{KnowledgeTracer, KtConfig};
use crate::numerics::{Parameterized, Rng};
use crate::pooling::{group_by_class, mean_pool, KnowledgeState, WeightLedger};
use crate::student::{evaluate, per_concept_accuracy, LabeledDataset, MiniBatch, Student};

/// How the agent's state is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// Knowledge vectors pooled per class with gated attention.
    Attention,
    /// Knowledge vectors averaged per class.
    MeanPool,
    /// `[last batch loss, reward-slice accuracy, t / T]`.
    Handcrafted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// Per-step change in performance with a dead band.
    Dense,
    /// 1 when performance beats the best earlier episode, else 0.
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeachingStack {
    pub state: StateKind,
    pub reward: RewardKind,
    /// Draw within-class samples from the attention weight ledger instead of
    /// uniformly.
    pub ledger: bool,
}

impl TeachingStack {
    pub fn uses_knowledge(&self) -> bool {
        self.state != StateKind::Handcrafted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub episodes: usize,
    pub steps: usize,
    pub batch_size: usize,
}

/// Splits a teacher works on. `reward_slice` indexes into `valid`.
#[derive(Debug, Clone)]
pub struct TeachingData {
    pub train: LabeledDataset,
    pub valid: LabeledDataset,
    pub test: LabeledDataset,
    pub reward_slice: Vec<usize>,
    pub num_concepts: usize,
    class_members: Vec<Vec<usize>>,
}

impl TeachingData {
    pub fn new(
        train: LabeledDataset,
        valid: LabeledDataset,
        test: LabeledDataset,
        reward_slice: Vec<usize>,
        num_concepts: usize,
    ) -> Result<Self> {
        if reward_slice.is_empty() {
            return Err(Error::Empty("reward slice"));
        }
        if let Some(&i) = reward_slice.iter().find(|&&i| i >= valid.len()) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: valid.len(),
            });
        }
        if train.num_classes() != valid.num_classes() || train.num_classes() != test.num_classes() {
            return Err(Error::invalid("splits disagree on the number of classes"));
        }
        if num_concepts == 0 {
            return Err(Error::invalid("at least one concept is required"));
        }
        let class_members = train.class_members();
        Ok(Self {
            train,
            valid,
            test,
            reward_slice,
            num_concepts,
            class_members,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.train.num_classes()
    }

    pub fn class_members(&self) -> &[Vec<usize>] {
        &self.class_members
    }

    pub fn check_schedule(&self, schedule: &Schedule) -> Result<()> {
        if schedule.episodes == 0 || schedule.steps == 0 || schedule.batch_size == 0 {
            return Err(Error::Config("episodes, steps and batch_size must be positive".into()));
        }
        if schedule.batch_size > self.train.len() {
            return Err(Error::Config(format!(
                "batch_size {} exceeds the {} training samples",
                schedule.batch_size,
                self.train.len()
            )));
        }
        Ok(())
    }

    /// Accuracy on the reward slice.
    pub fn performance(&self, student: &dyn Student) -> Result<f64> {
        Ok(evaluate(student, &self.valid, &self.reward_slice)?.accuracy)
    }

    /// End-of-episode evaluation on the full validation and test splits.
    pub fn episode_record(
        &self,
        student: &dyn Student,
        phase: u8,
        episode: usize,
        cumulative_reward: f64,
    ) -> Result<EpisodeRecord> {
        let all_valid: Vec<usize> = (0..self.valid.len()).collect();
        let all_test: Vec<usize> = (0..self.test.len()).collect();
        let v = evaluate(student, &self.valid, &all_valid)?;
        let t = evaluate(student, &self.test, &all_test)?;
        Ok(EpisodeRecord {
            phase,
            episode,
            cumulative_reward,
            valid_accuracy: v.accuracy,
            valid_auc: v.auc,
            test_accuracy: t.accuracy,
            test_auc: t.auc,
            test_loss: t.mean_loss,
            concept_accuracy: per_concept_accuracy(student, &self.valid, &all_valid, self.num_concepts)?,
        })
    }

    pub fn class_counts(&self, batch: &MiniBatch) -> Vec<usize> {
        let mut c = vec![0; self.num_classes()];
        for &i in batch.indices() {
            c[self.train.samples()[i].label] += 1;
        }
        c
    }
}

pub(crate) fn phase_name(phase: u8) -> &'static str {
    if phase == 1 {
        "phase 1"
    } else {
        "phase 2"
    }
}

pub(crate) fn with_context(phase: u8, seed: u64, episode: usize, step: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        e @ Error::Run { .. } => e,
        e => Error::Run {
            phase: phase_name(phase),
            seed,
            episode,
            step,
            source: Box::new(e),
        },
    }
}

struct Observation {
    state: KnowledgeState,
    flat: Vec<f64>,
    pool_inputs: Option<PoolInputs>,
    alphas: BTreeMap<usize, Vec<f64>>,
}

/// A learned teacher: agent networks, knowledge tracer, replay buffer and
/// exploration noise.
#[derive(Debug, Clone)]
pub struct Teacher {
    stack: TeachingStack,
    config: AgentConfig,
    nets: AgentNets,
    kt: Option<KnowledgeTracer>,
    replay: ReplayBuffer,
    noise: OuNoise,
    best_performance: Option<f64>,
    seed: u64,
}

impl Teacher {
    pub fn new(
        stack: TeachingStack,
        agent: AgentConfig,
        kt: KtConfig,
        data: &TeachingData,
        rng: &mut Rng,
    ) -> Result<Self> {
        let (o, n) = (data.num_classes(), data.num_concepts);
        let state_dim = if stack.uses_knowledge() { o * n } else { 3 };
        let with_attention = stack.state == StateKind::Attention;
        let nets = AgentNets::new(state_dim, o, n, with_attention, &agent, rng)?;
        let kt = if stack.uses_knowledge() {
            Some(KnowledgeTracer::new(data.train.len(), n, kt, rng)?)
        } else {
            None
        };
        Ok(Self {
            stack,
            replay: ReplayBuffer::new(agent.replay_capacity),
            noise: OuNoise::new(o, agent.noise, rng.fork(0x6e6f_6973)),
            config: agent,
            nets,
            kt,
            best_performance: None,
            seed: rng.seed(),
        })
    }

    pub fn stack(&self) -> TeachingStack {
        self.stack
    }

    pub fn nets(&self) -> &AgentNets {
        &self.nets
    }

    pub fn nets_mut(&mut self) -> &mut AgentNets {
        &mut self.nets
    }

    pub fn tracer(&self) -> Option<&KnowledgeTracer> {
        self.kt.as_ref()
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    /// Checksum over the agent networks, attention and knowledge-tracer
    /// parameters (value memory excluded).
    pub fn checksum(&self) -> u64 {
        let kt = self.kt.as_ref().map_or(0, |k| k.checksum());
        self.nets.checksum().rotate_left(7) ^ kt
    }

    /// Phase 1: episodes of teaching with exploration and per-step updates
    /// of the critic, actor, attention and knowledge tracer.
    pub fn run_training(
        &mut self,
        student: &mut dyn Student,
        data: &TeachingData,
        schedule: &Schedule,
        rng: &mut Rng,
    ) -> Result<MetricsLog> {
        self.run(student, data, schedule, true, 1, rng)
    }

    /// Phase 2: the learned policy teaches without exploration or updates.
    /// Knowledge-tracer writes still track the new student.
    pub fn run_frozen_policy(
        &mut self,
        student: &mut dyn Student,
        data: &TeachingData,
        schedule: &Schedule,
        rng: &mut Rng,
    ) -> Result<MetricsLog> {
        self.run(student, data, schedule, false, 2, rng)
    }

    fn observe(
        &self,
        data: &TeachingData,
        batch: &MiniBatch,
        prev: &KnowledgeState,
        interaction: u64,
        hand: [f64; 3],
    ) -> Result<Observation> {
        let Some(kt) = &self.kt else {
            return Ok(Observation {
                state: prev.clone(),
                flat: hand.to_vec(),
                pool_inputs: None,
                alphas: BTreeMap::new(),
            });
        };
        let by_class = group_by_class(&data.train, batch)?;
        let mut pooled = BTreeMap::new();
        let mut alphas = BTreeMap::new();
        let mut inputs: PoolInputs = vec![None; data.num_classes()];
        for (&class, members) in &by_class {
            let fs: Vec<Vec<f64>> = members
                .iter()
                .map(|&i| kt.read(i).map(|r| r.knowledge.values))
                .collect::<Result<_>>()?;
            let p = match &self.nets.attention {
                Some(att) => att.pool_class(&fs)?,
                None => mean_pool(&fs),
            };
            if let Some(p) = p {
                pooled.insert(class, p.vector);
                alphas.insert(class, p.alphas);
            }
            inputs[class] = Some(fs);
        }
        let state = prev.build(&pooled, interaction)?;
        Ok(Observation {
            flat: state.flatten(),
            state,
            pool_inputs: self.nets.attention.is_some().then_some(inputs),
            alphas,
        })
    }

    fn run(
        &mut self,
        student: &mut dyn Student,
        data: &TeachingData,
        schedule: &Schedule,
        learn: bool,
        phase: u8,
        rng: &mut Rng,
    ) -> Result<MetricsLog> {
        data.check_schedule(schedule)?;
        if student.num_classes() != data.num_classes() {
            return Err(Error::invalid("student and data disagree on the number of classes"));
        }
        let mut log = MetricsLog::default();
        for episode in 0..schedule.episodes {
            let (steps, record) = self.run_episode(student, data, schedule, learn, phase, episode, rng)?;
            log.steps.extend(steps);
            log.episodes.push(record);
        }
        Ok(log)
    }

    #[allow(clippy::too_many_arguments)]
    fn run_episode(
        &mut self,
        student: &mut dyn Student,
        data: &TeachingData,
        schedule: &Schedule,
        learn: bool,
        phase: u8,
        episode: usize,
        rng: &mut Rng,
    ) -> Result<(Vec<StepRecord>, EpisodeRecord)> {
        let seed = self.seed;
        let o = data.num_classes();
        let t_max = schedule.steps;
        let b = schedule.batch_size;
        let ctx0 = with_context(phase, seed, episode, 0);

        self.noise.reset();
        student.reinitialize(rng);
        if let Some(kt) = self.kt.as_mut() {
            kt.reset_value_memory(rng);
        }
        let mut ledger = WeightLedger::uniform(&data.train);
        let mut prev_perf = data.performance(student).map_err(&ctx0)?;
        let episode_start_perf = prev_perf;
        let threshold = self.best_performance.unwrap_or(episode_start_perf);

        let uniform = vec![1.0 / o as f64; o];
        let mut batch = weighted_sample(&data.train, data.class_members(), &uniform, None, b, rng).map_err(&ctx0)?;
        let seed_loss = batch
            .indices()
            .iter()
            .map(|&i| student.sample_loss(&data.train.samples()[i]))
            .sum::<f64>()
            / b as f64;
        let empty = KnowledgeState::zeros(o, data.num_concepts);
        let mut obs = self
            .observe(data, &batch, &empty, 0, [seed_loss, prev_perf, 0.0])
            .map_err(&ctx0)?;
        ledger.complete_interaction();

        let mut steps = Vec::with_capacity(t_max);
        let mut cumulative = 0.0;
        for t in 1..=t_max {
            let ctx = with_context(phase, seed, episode, t);
            let noise = learn.then(|| self.noise.step());
            let action = self.nets.select_action(&obs.flat, noise.as_deref()).map_err(&ctx)?;
            let use_ledger = self.stack.ledger && !obs.alphas.is_empty();
            if use_ledger {
                ledger.estimate_unseen(&data.train, &batch, &obs.alphas).map_err(&ctx)?;
            }
            let next_batch = weighted_sample(
                &data.train,
                data.class_members(),
                &action,
                use_ledger.then_some(&ledger),
                b,
                rng,
            )
            .map_err(&ctx)?;
            let train_loss = student.train_on_batch(&data.train, &next_batch).map_err(&ctx)?;
            let perf = data.performance(student).map_err(&ctx)?;
            let r = match self.stack.reward {
                RewardKind::Dense => reward(perf, prev_perf, self.config.reward_deadband),
                RewardKind::Sparse => sparse_reward(perf, threshold),
            };
            cumulative += r;

            let mut kt_rmse = None;
            if let Some(kt) = self.kt.as_mut() {
                let idx = next_batch.indices();
                let samples: Vec<_> = idx.iter().map(|&i| &data.train.samples()[i]).collect();
                let losses: Vec<f64> = samples.iter().map(|s| student.sample_loss(s)).collect();
                let errors: Vec<u8> = samples
                    .iter()
                    .map(|s| u8::from(student.predict(&s.features) != s.label))
                    .collect();
                kt_rmse = Some(if learn {
                    kt.kt_train_step(idx, &losses).map_err(&ctx)?
                } else {
                    kt.kt_loss(idx, &losses).map_err(&ctx)?
                });
                for (&i, &e) in idx.iter().zip(&errors) {
                    kt.write(i, e).map_err(&ctx)?;
                }
            }

            let hand = [train_loss, perf, t as f64 / t_max as f64];
            let next = self
                .observe(data, &next_batch, &obs.state, ledger.interactions(), hand)
                .map_err(&ctx)?;
            ledger.complete_interaction();

            let mut critic_loss = None;
            if learn {
                self.replay.push(Transition {
                    state: obs.flat.clone(),
                    action: action.clone(),
                    reward: r,
                    next_state: next.flat.clone(),
                    pool_inputs: obs.pool_inputs.clone(),
                });
                if self.replay.len() >= self.config.replay_batch {
                    let sample = self.replay.sample(self.config.replay_batch, rng).map_err(&ctx)?;
                    critic_loss = Some(self.nets.critic_update(&sample, self.config.gamma).map_err(&ctx)?);
                    self.nets.actor_update(&sample).map_err(&ctx)?;
                    self.nets.soft_update_targets(self.config.tau).map_err(&ctx)?;
                }
            }

            steps.push(StepRecord {
                phase,
                episode,
                step: t,
                reward: r,
                train_loss,
                performance: perf,
                kt_rmse,
                critic_loss,
                class_counts: data.class_counts(&next_batch),
                action,
            });
            prev_perf = perf;
            batch = next_batch;
            obs = next;
        }
        if learn && self.stack.reward == RewardKind::Sparse {
            let best = self.best_performance.map_or(prev_perf, |b| b.max(prev_perf));
            self.best_performance = Some(best);
        }
        let record = data
            .episode_record(student, phase, episode, cumulative)
            .map_err(with_context(phase, seed, episode, t_max))?;
        Ok((steps, record))
    }
}
