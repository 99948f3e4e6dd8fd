//! Finite-difference checks of every hand-written backward pass, on small
//! randomly initialized instances.

use serde::Serialize;

use crate::agent::{ActorBlock, AgentConfig, AgentNets, CriticBlock, Transition};
use crate::error::Result;
use crate::ktrace::{KnowledgeTracer, KtConfig};
use crate::numerics::{dot, finite_diff_check, softmax, GradCheckReport, Rng};
use crate::pooling::AttentionPooling;
use crate::student::{LabeledDataset, MiniBatch, NeuralStudent, Sample, StudentConfig, StudentKind};

pub const GRAD_STEP: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct GradEntry {
    pub component: &'static str,
    pub seed: u64,
    pub report: GradCheckReport,
}

fn uniform_vec(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect()
}

fn check_kt(seed: u64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let cfg = KtConfig {
        key_dim: 5,
        value_dim: 4,
        learning_rate: 0.01,
    };
    let mut kt = KnowledgeTracer::new(6, 4, cfg, &mut rng)?;
    for _ in 0..3 {
        let s = rng.below(6);
        kt.write(s, u8::from(rng.uniform() < 0.5))?;
    }
    let batch = rng.sample_indices(6, 3);
    let actual: Vec<f64> = (0..3).map(|_| rng.uniform_range(0.0, 2.0)).collect();
    finite_diff_check(
        &mut kt,
        |m, want| {
            if want {
                m.kt_loss_and_grad(&batch, &actual)
            } else {
                m.kt_loss(&batch, &actual)
            }
        },
        GRAD_STEP,
        GRAD_TOL,
    )
}

fn small_agent() -> AgentConfig {
    AgentConfig {
        hidden_units: 8,
        attention_hidden: 4,
        ..AgentConfig::default()
    }
}

fn transitions(state_dim: usize, o: usize, n: usize, pooled: bool, rng: &mut Rng) -> Result<Vec<Transition>> {
    (0..5)
        .map(|_| {
            let pool_inputs = pooled.then(|| {
                (0..o)
                    .map(|c| (c != 1).then(|| (0..3).map(|_| uniform_vec(n, rng)).collect()))
                    .collect()
            });
            Ok(Transition {
                state: uniform_vec(state_dim, rng),
                action: softmax(&uniform_vec(o, rng))?,
                reward: rng.uniform_range(-0.1, 0.1),
                next_state: uniform_vec(state_dim, rng),
                pool_inputs,
            })
        })
        .collect()
}

fn check_actor(seed: u64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let (o, n) = (3, 2);
    let mut nets = AgentNets::new(o * n, o, n, true, &small_agent(), &mut rng)?;
    let batch = transitions(o * n, o, n, true, &mut rng)?;
    let refs: Vec<&Transition> = batch.iter().collect();
    finite_diff_check(
        &mut ActorBlock(&mut nets),
        |m, g| m.0.actor_loss(&refs, g),
        GRAD_STEP,
        GRAD_TOL,
    )
}

fn check_critic(seed: u64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let mut nets = AgentNets::new(4, 3, 2, false, &small_agent(), &mut rng)?;
    let batch = transitions(4, 3, 2, false, &mut rng)?;
    let refs: Vec<&Transition> = batch.iter().collect();
    finite_diff_check(
        &mut CriticBlock(&mut nets),
        |m, g| m.0.critic_loss(&refs, 0.99, g),
        GRAD_STEP,
        GRAD_TOL,
    )
}

fn check_attention(seed: u64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let mut att = AttentionPooling::new(4, 6, &mut rng);
    let fs: Vec<Vec<f64>> = (0..5).map(|_| uniform_vec(4, &mut rng)).collect();
    let probe = uniform_vec(4, &mut rng);
    finite_diff_check(
        &mut att,
        |m, want| {
            let g = m.pool_class(&fs)?.map(|p| p.vector).unwrap_or_default();
            if want {
                m.backward(&fs, &probe)?;
            }
            Ok(dot(&g, &probe))
        },
        GRAD_STEP,
        GRAD_TOL,
    )
}

fn check_student(kind: StudentKind, seed: u64) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let samples = (0..8)
        .map(|i| Sample {
            index: 0,
            features: uniform_vec(3, &mut rng),
            label: i % 3,
            concept: None,
        })
        .collect();
    let data = LabeledDataset::new(samples, 3)?;
    let batch = MiniBatch::new(rng.sample_indices(8, 5), &data)?;
    let cfg = StudentConfig {
        hidden_units: 6,
        ..StudentConfig::default()
    };
    let mut s = NeuralStudent::new(kind, 3, 3, &cfg, &mut rng);
    finite_diff_check(
        &mut s,
        |m, want| {
            if want {
                m.loss_and_grad(&data, &batch)
            } else {
                m.batch_loss(&data, &batch)
            }
        },
        GRAD_STEP,
        GRAD_TOL,
    )
}

/// Runs every suite for every seed.
pub fn gradient_suite(seeds: &[u64]) -> Result<Vec<GradEntry>> {
    let mut out = Vec::new();
    for &seed in seeds {
        let checks: [(&'static str, Result<GradCheckReport>); 6] = [
            ("kt", check_kt(seed)),
            ("actor", check_actor(seed)),
            ("critic", check_critic(seed)),
            ("attention", check_attention(seed)),
            ("student_logistic", check_student(StudentKind::Logistic, seed)),
            ("student_mlp", check_student(StudentKind::Mlp, seed)),
        ];
        for (component, report) in checks {
            out.push(GradEntry {
                component,
                seed,
                report: report?,
            });
        }
    }
    Ok(out)
}
