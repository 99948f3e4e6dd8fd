//! Reference teachers: uniform random batches, self-paced learning, the
//! sparse-reward agent and the ablated agent stacks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{
    with_context, MetricsLog, RewardKind, Schedule, StateKind, StepRecord, TeachingData, TeachingStack,
};
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::student::{LabeledDataset, MiniBatch, Student};

/// Uniform draw of `batch_size` distinct training samples.
pub fn random_teach(data: &LabeledDataset, batch_size: usize, rng: &mut Rng) -> Result<MiniBatch> {
    if batch_size == 0 || batch_size > data.len() {
        return Err(Error::invalid(format!(
            "batch size {batch_size} must lie in 1..={}",
            data.len()
        )));
    }
    MiniBatch::new(rng.sample_indices(data.len(), batch_size), data)
}

/// 1 when `p` strictly beats `threshold`, else 0.
pub fn sparse_reward(p: f64, threshold: f64) -> f64 {
    if p > threshold {
        1.0
    } else {
        0.0
    }
}

/// Hardness threshold that grows geometrically at every epoch boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SplSchedule {
    lambda: f64,
    growth: f64,
    epoch: usize,
    steps_per_epoch: usize,
    step: usize,
}

impl SplSchedule {
    pub fn new(lambda: f64, growth: f64, steps_per_epoch: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::invalid("hardness threshold must be positive"));
        }
        if !(growth > 1.0) || !growth.is_finite() {
            return Err(Error::invalid("threshold growth factor must exceed 1"));
        }
        if steps_per_epoch == 0 {
            return Err(Error::invalid("an epoch needs at least one step"));
        }
        Ok(Self {
            lambda,
            growth,
            epoch: 0,
            steps_per_epoch,
            step: 0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Counts one teaching step; crossing an epoch boundary raises λ.
    pub fn advance(&mut self) {
        self.step += 1;
        if self.step.is_multiple_of(self.steps_per_epoch) {
            self.epoch += 1;
            self.lambda *= self.growth;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplBatch {
    pub batch: MiniBatch,
    /// Pool size before any fallback.
    pub pool_size: usize,
    /// True when the pool was empty and the easiest samples were taken.
    pub fallback: bool,
}

/// Samples with loss at most λ, in index order.
pub fn spl_pool(student: &dyn Student, data: &LabeledDataset, lambda: f64) -> Vec<usize> {
    data.samples()
        .iter()
        .filter(|s| student.sample_loss(s) <= lambda)
        .map(|s| s.index)
        .collect()
}

/// Draws a batch uniformly from the samples the student finds easy enough.
/// A pool smaller than the batch is topped up with the next easiest
/// samples; an empty pool falls back to the easiest samples outright.
pub fn spl_filter(
    student: &dyn Student,
    data: &LabeledDataset,
    schedule: &SplSchedule,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<SplBatch> {
    if batch_size == 0 || batch_size > data.len() {
        return Err(Error::invalid(format!(
            "batch size {batch_size} must lie in 1..={}",
            data.len()
        )));
    }
    let losses: Vec<f64> = data.samples().iter().map(|s| student.sample_loss(s)).collect();
    let pool: Vec<usize> = (0..data.len()).filter(|&i| losses[i] <= schedule.lambda()).collect();
    let easiest = |exclude: &[usize], k: usize| {
        let mut taken = vec![false; data.len()];
        for &i in exclude {
            taken[i] = true;
        }
        let mut rest: Vec<usize> = (0..data.len()).filter(|&i| !taken[i]).collect();
        rest.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
        rest.truncate(k);
        rest
    };
    let indices = if pool.len() >= batch_size {
        rng.sample_indices(pool.len(), batch_size)
            .into_iter()
            .map(|j| pool[j])
            .collect()
    } else {
        let mut chosen = pool.clone();
        chosen.extend(easiest(&pool, batch_size - pool.len()));
        chosen
    };
    Ok(SplBatch {
        batch: MiniBatch::new(indices, data)?,
        pool_size: pool.len(),
        fallback: pool.is_empty(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Basic,
    Kt,
    Full,
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Ablation::Basic),
            "kt" => Ok(Ablation::Kt),
            "full" => Ok(Ablation::Full),
            other => Err(Error::Unknown {
                what: "ablation variant",
                value: other.to_string(),
            }),
        }
    }
}

pub fn ablation_variant(kind: Ablation) -> TeachingStack {
    match kind {
        Ablation::Basic => TeachingStack {
            state: StateKind::Handcrafted,
            reward: RewardKind::Dense,
            ledger: false,
        },
        Ablation::Kt => TeachingStack {
            state: StateKind::MeanPool,
            reward: RewardKind::Dense,
            ledger: false,
        },
        Ablation::Full => TeachingStack {
            state: StateKind::Attention,
            reward: RewardKind::Dense,
            ledger: true,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherKind {
    Kadt,
    KadtKt,
    KadtBasic,
    L2t,
    Spl,
    Random,
}

impl TeacherKind {
    pub const ALL: [TeacherKind; 6] = [
        TeacherKind::Kadt,
        TeacherKind::KadtKt,
        TeacherKind::KadtBasic,
        TeacherKind::L2t,
        TeacherKind::Spl,
        TeacherKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TeacherKind::Kadt => "kadt",
            TeacherKind::KadtKt => "kadt_kt",
            TeacherKind::KadtBasic => "kadt_basic",
            TeacherKind::L2t => "l2t",
            TeacherKind::Spl => "spl",
            TeacherKind::Random => "random",
        }
    }

    /// Agent stack for the learned teachers; `None` for SPL and random.
    pub fn stack(self) -> Option<TeachingStack> {
        match self {
            TeacherKind::Kadt => Some(ablation_variant(Ablation::Full)),
            TeacherKind::KadtKt => Some(ablation_variant(Ablation::Kt)),
            TeacherKind::KadtBasic => Some(ablation_variant(Ablation::Basic)),
            TeacherKind::L2t => Some(TeachingStack {
                state: StateKind::Handcrafted,
                reward: RewardKind::Sparse,
                ledger: false,
            }),
            TeacherKind::Spl | TeacherKind::Random => None,
        }
    }
}

impl fmt::Display for TeacherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TeacherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        TeacherKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::Unknown {
                what: "teacher kind",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplConfig {
    /// Candidate initial thresholds; phase 1 keeps the best one.
    pub thresholds: Vec<f64>,
    pub growth: f64,
    /// Steps per threshold increase; unset means one pass over the
    /// training split.
    pub epoch_steps: Option<usize>,
}

impl Default for SplConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0.4, 0.6, 0.8, 1.0, 1.5],
            growth: 1.1,
            epoch_steps: Some(5),
        }
    }
}

impl SplConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config(
                "spl.thresholds must be a non-empty list of positive values".into(),
            ));
        }
        if !(self.growth > 1.0) {
            return Err(Error::Config("spl.growth must exceed 1".into()));
        }
        if self.epoch_steps == Some(0) {
            return Err(Error::Config("spl.epoch_steps must be positive".into()));
        }
        Ok(())
    }

    fn steps_per_epoch(&self, train_len: usize, batch_size: usize) -> usize {
        self.epoch_steps
            .unwrap_or_else(|| train_len.div_ceil(batch_size))
            .max(1)
    }
}

/// A teacher without learned parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedTeacher {
    Random,
    Spl { lambda: f64 },
}

impl FixedTeacher {
    /// Teaches `schedule.episodes` fresh students and logs them like the
    /// learned teachers so reports line up.
    pub fn run(
        &self,
        student: &mut dyn Student,
        data: &TeachingData,
        schedule: &Schedule,
        spl: &SplConfig,
        phase: u8,
        rng: &mut Rng,
    ) -> Result<MetricsLog> {
        data.check_schedule(schedule)?;
        let seed = rng.seed();
        let mut log = MetricsLog::default();
        for episode in 0..schedule.episodes {
            let ctx0 = with_context(phase, seed, episode, 0);
            student.reinitialize(rng);
            let mut sched = match *self {
                FixedTeacher::Spl { lambda } => Some(
                    SplSchedule::new(
                        lambda,
                        spl.growth,
                        spl.steps_per_epoch(data.train.len(), schedule.batch_size),
                    )
                    .map_err(&ctx0)?,
                ),
                FixedTeacher::Random => None,
            };
            let mut prev = data.performance(student).map_err(&ctx0)?;
            let mut cumulative = 0.0;
            for t in 1..=schedule.steps {
                let ctx = with_context(phase, seed, episode, t);
                let batch = match sched.as_mut() {
                    Some(s) => {
                        let picked = spl_filter(student, &data.train, s, schedule.batch_size, rng).map_err(&ctx)?;
                        if picked.fallback {
                            log::debug!("spl fallback at episode {episode} step {t}, lambda {}", s.lambda());
                        }
                        s.advance();
                        picked.batch
                    }
                    None => random_teach(&data.train, schedule.batch_size, rng).map_err(&ctx)?,
                };
                let train_loss = student.train_on_batch(&data.train, &batch).map_err(&ctx)?;
                let perf = data.performance(student).map_err(&ctx)?;
                let counts = data.class_counts(&batch);
                let b = schedule.batch_size as f64;
                cumulative += perf - prev;
                log.steps.push(StepRecord {
                    phase,
                    episode,
                    step: t,
                    reward: perf - prev,
                    train_loss,
                    performance: perf,
                    kt_rmse: None,
                    critic_loss: None,
                    action: counts.iter().map(|&c| c as f64 / b).collect(),
                    class_counts: counts,
                });
                prev = perf;
            }
            log.episodes.push(
                data.episode_record(student, phase, episode, cumulative)
                    .map_err(with_context(phase, seed, episode, schedule.steps))?,
            );
        }
        Ok(log)
    }
}

/// Phase 1 for SPL: tries each candidate threshold on an equal share of the
/// episode budget and keeps the one with the best mean validation accuracy.
pub fn select_spl_threshold(
    student: &mut dyn Student,
    data: &TeachingData,
    schedule: &Schedule,
    spl: &SplConfig,
    rng: &mut Rng,
) -> Result<(f64, MetricsLog)> {
    spl.validate()?;
    let share = Schedule {
        episodes: (schedule.episodes / spl.thresholds.len()).max(1),
        ..*schedule
    };
    let mut best: Option<(f64, f64)> = None;
    let mut log = MetricsLog::default();
    for &lambda in &spl.thresholds {
        let run = FixedTeacher::Spl { lambda }.run(student, data, &share, spl, 1, rng)?;
        let score = run.episodes.iter().map(|e| e.valid_accuracy).sum::<f64>() / run.episodes.len() as f64;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((lambda, score));
        }
        let offset = log.episodes.len();
        log.extend(MetricsLog {
            steps: run
                .steps
                .into_iter()
                .map(|mut s| {
                    s.episode += offset;
                    s
                })
                .collect(),
            episodes: run
                .episodes
                .into_iter()
                .map(|mut e| {
                    e.episode += offset;
                    e
                })
                .collect(),
        });
    }
    Ok((best.map(|b| b.0).unwrap_or(spl.thresholds[0]), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::student::{build_student, Sample, StudentConfig, StudentKind};

    fn dataset(n: usize) -> LabeledDataset {
        let mut rng = Rng::new(3);
        let samples = (0..n)
            .map(|i| {
                let label = i % 2;
                let x = if label == 0 { -1.0 } else { 1.0 };
                Sample {
                    index: 0,
                    features: vec![x + 0.8 * rng.normal(), rng.normal()],
                    label,
                    concept: Some(i % 4),
                }
            })
            .collect();
        LabeledDataset::new(samples, 2).unwrap()
    }

    #[test]
    fn sparse_reward_is_strict() {
        assert_eq!(sparse_reward(0.9, 0.8), 1.0);
        assert_eq!(sparse_reward(0.8, 0.8), 0.0);
        assert_eq!(sparse_reward(0.1, 0.8), 0.0);
    }

    #[test]
    fn random_teach_full_batch_is_a_permutation() {
        let d = dataset(30);
        let mut rng = Rng::new(0);
        let b = random_teach(&d, 30, &mut rng).unwrap();
        let mut idx = b.indices().to_vec();
        idx.sort_unstable();
        assert_eq!(idx, (0..30).collect::<Vec<_>>());
        assert!(random_teach(&d, 31, &mut rng).is_err());
    }

    #[test]
    fn random_teach_frequencies_are_uniform() {
        let d = dataset(20);
        let mut rng = Rng::new(5);
        let (draws, k) = (100_000usize, 4usize);
        let mut hits = vec![0usize; 20];
        for _ in 0..draws {
            for &i in random_teach(&d, k, &mut rng).unwrap().indices() {
                hits[i] += 1;
            }
        }
        let p = k as f64 / 20.0;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for h in hits {
            assert!((h as f64 - mean).abs() < 3.0 * sd + 1.0, "{h} vs {mean}");
        }
    }

    #[test]
    fn spl_extremes() {
        let d = dataset(40);
        let mut rng = Rng::new(1);
        let s = build_student(StudentKind::Logistic, 2, 2, &StudentConfig::default(), &mut rng);
        let open = SplSchedule::new(f64::INFINITY, 1.1, 1).unwrap();
        let b = spl_filter(s.as_ref(), &d, &open, 8, &mut rng).unwrap();
        assert_eq!(b.pool_size, 40);
        assert!(!b.fallback);

        let closed = SplSchedule::new(1e-12, 1.1, 1).unwrap();
        let b = spl_filter(s.as_ref(), &d, &closed, 5, &mut rng).unwrap();
        assert!(b.fallback);
        let mut losses: Vec<(f64, usize)> = d.samples().iter().map(|x| (s.sample_loss(x), x.index)).collect();
        losses.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut want: Vec<usize> = losses[..5].iter().map(|x| x.1).collect();
        let mut got = b.batch.indices().to_vec();
        want.sort_unstable();
        got.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn spl_pool_grows_with_threshold() {
        let d = dataset(60);
        let mut rng = Rng::new(2);
        let s = build_student(StudentKind::Mlp, 2, 2, &StudentConfig::default(), &mut rng);
        let mut sched = SplSchedule::new(0.5, 1.1, 2).unwrap();
        let mut last = 0;
        for _ in 0..20 {
            let size = spl_pool(s.as_ref(), &d, sched.lambda()).len();
            assert!(size >= last);
            last = size;
            let before = sched.lambda();
            sched.advance();
            assert!(sched.lambda() >= before);
        }
        assert_eq!(sched.epoch(), 10);
    }

    #[test]
    fn schedule_validation() {
        assert!(SplSchedule::new(0.0, 1.1, 1).is_err());
        assert!(SplSchedule::new(1.0, 1.0, 1).is_err());
        assert!(SplSchedule::new(1.0, 1.1, 0).is_err());
    }

    #[test]
    fn variants() {
        assert_eq!(ablation_variant(Ablation::Basic).state, StateKind::Handcrafted);
        assert_eq!(ablation_variant(Ablation::Kt).state, StateKind::MeanPool);
        assert!(!ablation_variant(Ablation::Kt).ledger);
        assert_eq!(TeacherKind::Kadt.stack(), Some(ablation_variant(Ablation::Full)));
        assert!("nope".parse::<Ablation>().is_err());
        assert_eq!("kadt-kt".parse::<TeacherKind>().unwrap(), TeacherKind::KadtKt);
        assert!("teacher".parse::<TeacherKind>().is_err());
        for k in TeacherKind::ALL {
            assert_eq!(k.to_string().parse::<TeacherKind>().unwrap(), k);
        }
    }
}
