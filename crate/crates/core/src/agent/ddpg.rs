use serde::{Deserialize, Serialize};

use super::noise::OuConfig;
use super::replay::Transition;
use crate::error::{Error, Result};
use crate::numerics::{
    softmax, softmax_backward, Activation, Matrix, Mlp, Optimizer, OptimizerKind, Param, Parameterized, Rng,
};
use crate::pooling::AttentionPooling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub gamma: f64,
    /// Soft target update rate.
    pub tau: f64,
    pub replay_capacity: usize,
    /// Transitions per update; updates start once the buffer holds this many.
    pub replay_batch: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub attention_lr: f64,
    pub hidden_units: usize,
    pub attention_hidden: usize,
    pub reward_deadband: f64,
    pub noise: OuConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.001,
            replay_capacity: 10_000,
            replay_batch: 64,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            attention_lr: 1e-4,
            hidden_units: 64,
            attention_hidden: 32,
            reward_deadband: 0.01,
            noise: OuConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("agent.gamma must lie in [0, 1]");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("agent.tau must lie in (0, 1]");
        }
        if self.replay_batch == 0 || self.replay_capacity < self.replay_batch {
            return bad("agent.replay_capacity must be at least agent.replay_batch > 0");
        }
        if self.hidden_units == 0 || self.attention_hidden == 0 {
            return bad("agent hidden sizes must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0 && self.attention_lr > 0.0) {
            return bad("agent learning rates must be positive");
        }
        if self.reward_deadband < 0.0 || self.noise.sigma < 0.0 || self.noise.dt <= 0.0 {
            return bad("agent.reward_deadband and noise.sigma must be non-negative, noise.dt positive");
        }
        Ok(())
    }
}

/// Actor, critic, their slowly tracking targets, and the optional attention
/// block that builds the actor's state.
#[derive(Debug, Clone)]
pub struct AgentNets {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub attention: Option<AttentionPooling>,
    state_dim: usize,
    num_classes: usize,
    num_concepts: usize,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
    attention_opt: Optimizer,
}

fn row_softmax(logits: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        out.row_mut(r).copy_from_slice(&softmax(logits.row(r))?);
    }
    Ok(out)
}

impl AgentNets {
    /// `num_concepts` gives the width of one class row when the state is a
    /// pooled knowledge matrix; the attention block needs it.
    pub fn new(
        state_dim: usize,
        num_classes: usize,
        num_concepts: usize,
        with_attention: bool,
        config: &AgentConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        config.validate()?;
        if state_dim == 0 || num_classes == 0 {
            return Err(Error::invalid("agent needs a non-empty state and at least one class"));
        }
        if with_attention && state_dim != num_classes * num_concepts {
            return Err(Error::invalid("attention state must be classes x concepts wide"));
        }
        let h = config.hidden_units;
        let actor = Mlp::new(
            "actor",
            &[state_dim, h, h, num_classes],
            Activation::Tanh,
            Activation::Identity,
            rng,
        );
        let critic = Mlp::new(
            "critic",
            &[state_dim + num_classes, h, h, 1],
            Activation::Tanh,
            Activation::Identity,
            rng,
        );
        let attention = with_attention.then(|| AttentionPooling::new(num_concepts, config.attention_hidden, rng));
        Ok(Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            attention,
            state_dim,
            num_classes,
            num_concepts,
            actor_opt: Optimizer::new(OptimizerKind::adam(config.actor_lr)),
            critic_opt: Optimizer::new(OptimizerKind::adam(config.critic_lr)),
            attention_opt: Optimizer::new(OptimizerKind::adam(config.attention_lr)),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.state_dim {
            return Err(Error::Shape {
                context: "agent state",
                expected: (self.state_dim, 1),
                actual: (state.len(), 1),
            });
        }
        if state.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("agent state"));
        }
        Ok(())
    }

    /// Actor output mapped onto the simplex; `noise` is added to the logits
    /// before the softmax.
    pub fn select_action(&self, state: &[f64], noise: Option<&[f64]>) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let mut logits = self.actor.infer(&Matrix::row_vector(state))?.into_vec();
        if let Some(n) = noise {
            if n.len() != logits.len() {
                return Err(Error::Shape {
                    context: "exploration noise",
                    expected: (logits.len(), 1),
                    actual: (n.len(), 1),
                });
            }
            for (l, d) in logits.iter_mut().zip(n) {
                *l += d;
            }
        }
        softmax(&logits)
    }

    /// Critic estimate `Q(s, a)`.
    pub fn q_value(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        self.check_state(state)?;
        let x = Matrix::row_vector(&[state, action].concat());
        Ok(self.critic.infer(&x)?.get(0, 0))
    }

    fn stack(&self, batch: &[&Transition], next: bool) -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = batch
            .iter()
            .map(|t| if next { t.next_state.clone() } else { t.state.clone() })
            .collect();
        Matrix::from_rows(&rows)
    }

    /// TD targets `r + γ Q'(s', ψ'(s'))` from the target networks.
    pub fn td_targets(&self, batch: &[&Transition], gamma: f64) -> Result<Vec<f64>> {
        let next = self.stack(batch, true)?;
        let a_next = row_softmax(&self.target_actor.infer(&next)?)?;
        let q_next = self.target_critic.infer(&next.hcat(&a_next)?)?;
        Ok(batch
            .iter()
            .enumerate()
            .map(|(i, t)| t.reward + gamma * q_next.get(i, 0))
            .collect())
    }

    /// Mean squared TD error; with `want_grad` the critic gradients are
    /// accumulated.
    pub fn critic_loss(&mut self, batch: &[&Transition], gamma: f64, want_grad: bool) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("critic batch"));
        }
        let y = self.td_targets(batch, gamma)?;
        let actions: Vec<Vec<f64>> = batch.iter().map(|t| t.action.clone()).collect();
        let x = self.stack(batch, false)?.hcat(&Matrix::from_rows(&actions)?)?;
        let n = batch.len() as f64;
        let q = if want_grad {
            self.critic.forward(&x)?
        } else {
            self.critic.infer(&x)?
        };
        let diff: Vec<f64> = (0..batch.len()).map(|i| q.get(i, 0) - y[i]).collect();
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite("critic loss"));
        }
        if want_grad {
            let g = Matrix::from_vec(batch.len(), 1, diff.iter().map(|d| 2.0 * d / n).collect())?;
            self.critic.backward(&g)?;
        }
        Ok(loss)
    }

    /// Rebuilds each transition's state with the current attention
    /// parameters wherever its rows came from pooled knowledge vectors.
    fn current_states(&self, batch: &[&Transition]) -> Result<Matrix> {
        let mut m = self.stack(batch, false)?;
        if let Some(att) = &self.attention {
            let n = self.num_concepts;
            for (r, t) in batch.iter().enumerate() {
                let Some(inputs) = &t.pool_inputs else { continue };
                for (class, fs) in inputs.iter().enumerate() {
                    if let Some(p) = fs.as_ref().and_then(|fs| att.pool_class(fs).transpose()) {
                        m.row_mut(r)[class * n..(class + 1) * n].copy_from_slice(&p?.vector);
                    }
                }
            }
        }
        Ok(m)
    }

    /// Negated mean critic score of the actor's actions, `-mean Q(s, ψ(s))`.
    ///
    /// The actor (and attention) see states pooled with current parameters
    /// while the critic scores them at the stored state, so the gradient
    /// flows only through the action. With `want_grad` the actor and
    /// attention gradients are accumulated; critic gradients are discarded.
    pub fn actor_loss(&mut self, batch: &[&Transition], want_grad: bool) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("actor batch"));
        }
        let s_cur = self.current_states(batch)?;
        let s_stored = self.stack(batch, false)?;
        let logits = if want_grad {
            self.actor.forward(&s_cur)?
        } else {
            self.actor.infer(&s_cur)?
        };
        let probs = row_softmax(&logits)?;
        let x = s_stored.hcat(&probs)?;
        let n = batch.len() as f64;
        let q = if want_grad {
            self.critic.forward(&x)?
        } else {
            self.critic.infer(&x)?
        };
        let loss = -q.data().iter().sum::<f64>() / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite("actor objective"));
        }
        if !want_grad {
            return Ok(loss);
        }
        let dq = Matrix::filled(batch.len(), 1, -1.0 / n);
        let dx = self.critic.backward(&dq)?;
        self.critic.zero_grad();
        let (_, dprobs) = dx.hsplit(self.state_dim);
        let mut dlogits = Matrix::zeros(probs.rows(), probs.cols());
        for r in 0..probs.rows() {
            dlogits
                .row_mut(r)
                .copy_from_slice(&softmax_backward(probs.row(r), dprobs.row(r)));
        }
        let ds = self.actor.backward(&dlogits)?;
        if let Some(att) = self.attention.as_mut() {
            let n = self.num_concepts;
            for (r, t) in batch.iter().enumerate() {
                let Some(inputs) = &t.pool_inputs else { continue };
                for (class, fs) in inputs.iter().enumerate() {
                    if let Some(fs) = fs {
                        att.backward(fs, &ds.row(r)[class * n..(class + 1) * n])?;
                    }
                }
            }
        }
        Ok(loss)
    }

    /// One Adam step on the critic; returns the pre-step loss.
    pub fn critic_update(&mut self, batch: &[&Transition], gamma: f64) -> Result<f64> {
        self.critic.zero_grad();
        let loss = self.critic_loss(batch, gamma, true)?;
        self.critic_opt.step(self.critic.params_mut())?;
        Ok(loss)
    }

    /// One Adam step on the actor and attention; returns the pre-step
    /// objective.
    pub fn actor_update(&mut self, batch: &[&Transition]) -> Result<f64> {
        self.actor.zero_grad();
        if let Some(a) = self.attention.as_mut() {
            a.zero_grad();
        }
        let loss = self.actor_loss(batch, true)?;
        self.actor_opt.step(self.actor.params_mut())?;
        if let Some(a) = self.attention.as_mut() {
            self.attention_opt.step(a.params_mut())?;
        }
        Ok(loss)
    }

    /// `θ' <- τθ + (1 - τ)θ'` for both target networks.
    pub fn soft_update_targets(&mut self, tau: f64) -> Result<()> {
        self.target_actor.soft_update_from(&self.actor, tau)?;
        self.target_critic.soft_update_from(&self.critic, tau)
    }

    /// Combined checksum over every teacher-side network.
    pub fn checksum(&self) -> u64 {
        let mut parts = vec![
            self.actor.checksum(),
            self.critic.checksum(),
            self.target_actor.checksum(),
            self.target_critic.checksum(),
        ];
        if let Some(a) = &self.attention {
            parts.push(a.checksum());
        }
        parts.iter().fold(0u64, |h, &p| h.rotate_left(13) ^ p)
    }
}

/// Actor and attention parameters viewed as one block, for gradient checks.
pub struct ActorBlock<'a>(pub &'a mut AgentNets);

impl Parameterized for ActorBlock<'_> {
    fn params(&self) -> Vec<&Param> {
        let mut p = self.0.actor.params();
        if let Some(a) = &self.0.attention {
            p.extend(a.params());
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let nets = &mut *self.0;
        let mut p = nets.actor.params_mut();
        if let Some(a) = nets.attention.as_mut() {
            p.extend(a.params_mut());
        }
        p
    }
}

/// Critic parameters alone, for gradient checks.
pub struct CriticBlock<'a>(pub &'a mut AgentNets);

impl Parameterized for CriticBlock<'_> {
    fn params(&self) -> Vec<&Param> {
        self.0.critic.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.0.critic.params_mut()
    }
}
