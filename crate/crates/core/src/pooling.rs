//! Distills per-sample knowledge vectors into the teaching agent's state.
//!
//! Each class row of the state is a gated-attention weighted combination of
//! the knowledge vectors of that class's samples in the latest mini-batch.
//! The attention weights of samples outside the batch are estimated from
//! feature similarity to the in-batch samples and kept in a [`WeightLedger`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, sigmoid, Param, Parameterized, Rng};
use crate::student::{LabeledDataset, MiniBatch};

/// Learnable parameters of the gated attention: `c` (length L), `W` and
/// `U` (both `N x L`).
#[derive(Debug, Clone)]
pub struct AttentionPooling {
    pub context: Param,
    pub tanh_w: Param,
    pub gate_u: Param,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub vector: Vec<f64>,
    pub alphas: Vec<f64>,
}

struct ScoreCache {
    h_tanh: Vec<f64>,
    h_gate: Vec<f64>,
}

impl AttentionPooling {
    pub fn new(num_concepts: usize, hidden: usize, rng: &mut Rng) -> Self {
        Self {
            context: Param::uniform("attn.c", 1, hidden, hidden, rng),
            tanh_w: Param::uniform("attn.w", num_concepts, hidden, num_concepts, rng),
            gate_u: Param::uniform("attn.u", num_concepts, hidden, num_concepts, rng),
        }
    }

    pub fn num_concepts(&self) -> usize {
        self.tanh_w.value.rows()
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.num_concepts() {
            return Err(Error::Shape {
                context: "knowledge vector",
                expected: (self.num_concepts(), 1),
                actual: (f.len(), 1),
            });
        }
        Ok(())
    }

    /// Exponent of the gate, `cᵀ[tanh(Wᵀf) ∘ sigmoid(Uᵀf)] / √N`.
    fn logit(&self, f: &[f64]) -> (f64, ScoreCache) {
        let h_tanh: Vec<f64> = self
            .tanh_w
            .value
            .vec_mul(f)
            .expect("checked")
            .iter()
            .map(|z| z.tanh())
            .collect();
        let h_gate: Vec<f64> = self
            .gate_u
            .value
            .vec_mul(f)
            .expect("checked")
            .iter()
            .map(|&z| sigmoid(z))
            .collect();
        let gated: Vec<f64> = h_tanh.iter().zip(&h_gate).map(|(a, b)| a * b).collect();
        let z = dot(self.context.value.data(), &gated) / (self.num_concepts() as f64).sqrt();
        (z, ScoreCache { h_tanh, h_gate })
    }

    /// Raw gated attention scores `GA(f) = exp(...)`, strictly positive.
    pub fn gated_scores(&self, fs: &[Vec<f64>]) -> Result<Vec<f64>> {
        if fs.is_empty() {
            return Err(Error::Empty("knowledge vectors"));
        }
        fs.iter()
            .map(|f| {
                self.check(f)?;
                Ok(self.logit(f).0.exp())
            })
            .collect()
    }

    /// Attention-pooled vector of one class; `None` when the class is absent.
    pub fn pool_class(&self, fs: &[Vec<f64>]) -> Result<Option<Pooled>> {
        if fs.is_empty() {
            return Ok(None);
        }
        for f in fs {
            self.check(f)?;
        }
        let logits: Vec<f64> = fs.iter().map(|f| self.logit(f).0).collect();
        // normalizing GA over the class equals a softmax of the exponents
        let alphas = crate::numerics::softmax_unchecked(&logits);
        Ok(Some(Pooled {
            vector: combine(fs, &alphas),
            alphas,
        }))
    }

    /// Accumulates `dL/dparams` given `dL/dg` for one pooled class.
    pub fn backward(&mut self, fs: &[Vec<f64>], grad_pooled: &[f64]) -> Result<()> {
        if fs.is_empty() {
            return Ok(());
        }
        let caches: Vec<(f64, ScoreCache)> = fs
            .iter()
            .map(|f| {
                self.check(f)?;
                Ok(self.logit(f))
            })
            .collect::<Result<_>>()?;
        let logits: Vec<f64> = caches.iter().map(|c| c.0).collect();
        let alphas = crate::numerics::softmax_unchecked(&logits);
        let d_alpha: Vec<f64> = fs.iter().map(|f| dot(f, grad_pooled)).collect();
        let d_logit = crate::numerics::softmax_backward(&alphas, &d_alpha);
        let scale = 1.0 / (self.num_concepts() as f64).sqrt();
        let c = self.context.value.data().to_vec();
        for ((f, (_, cache)), dz) in fs.iter().zip(&caches).zip(d_logit) {
            let g = dz * scale;
            let mut d_pre_t = vec![0.0; c.len()];
            let mut d_pre_g = vec![0.0; c.len()];
            for l in 0..c.len() {
                let (t, s) = (cache.h_tanh[l], cache.h_gate[l]);
                self.context.grad.add_at(0, l, g * t * s);
                d_pre_t[l] = g * c[l] * s * (1.0 - t * t);
                d_pre_g[l] = g * c[l] * t * s * (1.0 - s);
            }
            self.tanh_w.grad.add_outer(f, &d_pre_t, 1.0)?;
            self.gate_u.grad.add_outer(f, &d_pre_g, 1.0)?;
        }
        Ok(())
    }
}

impl Parameterized for AttentionPooling {
    fn params(&self) -> Vec<&Param> {
        vec![&self.context, &self.tanh_w, &self.gate_u]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.context, &mut self.tanh_w, &mut self.gate_u]
    }
}

fn combine(fs: &[Vec<f64>], alphas: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; fs[0].len()];
    for (f, &a) in fs.iter().zip(alphas) {
        for (gi, fi) in g.iter_mut().zip(f) {
            *gi += a * fi;
        }
    }
    g
}

/// Arithmetic mean with uniform weights, for the variant without attention.
pub fn mean_pool(fs: &[Vec<f64>]) -> Option<Pooled> {
    if fs.is_empty() {
        return None;
    }
    let alphas = vec![1.0 / fs.len() as f64; fs.len()];
    Some(Pooled {
        vector: combine(fs, &alphas),
        alphas,
    })
}

/// The `O x N` state: one pooled knowledge row per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeState {
    rows: Vec<Vec<f64>>,
    /// Interaction that last refreshed each row.
    provenance: Vec<Option<u64>>,
}

impl KnowledgeState {
    pub fn zeros(num_classes: usize, num_concepts: usize) -> Self {
        Self {
            rows: vec![vec![0.0; num_concepts]; num_classes],
            provenance: vec![None; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.rows.len()
    }

    pub fn num_concepts(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.rows[class]
    }

    pub fn provenance(&self) -> &[Option<u64>] {
        &self.provenance
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.rows.concat()
    }

    /// Replaces rows with fresh pooled vectors; absent classes carry over.
    pub fn build(&self, pooled: &BTreeMap<usize, Vec<f64>>, interaction: u64) -> Result<KnowledgeState> {
        let mut next = self.clone();
        for (&class, g) in pooled {
            if class >= self.rows.len() {
                return Err(Error::LabelOutOfRange {
                    label: class,
                    num_classes: self.rows.len(),
                });
            }
            if g.len() != self.num_concepts() {
                return Err(Error::Shape {
                    context: "pooled vector",
                    expected: (self.num_concepts(), 1),
                    actual: (g.len(), 1),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("pooled vector"));
            }
            next.rows[class] = g.clone();
            next.provenance[class] = Some(interaction);
        }
        Ok(next)
    }
}

/// Batch members per class, in batch order. Attention weights for a class
/// are always aligned with this order.
pub fn group_by_class(data: &LabeledDataset, batch: &MiniBatch) -> Result<BTreeMap<usize, Vec<usize>>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in batch.indices() {
        by_class.entry(data.sample(i)?.label).or_default().push(i);
    }
    Ok(by_class)
}

/// Clipped cosine similarity in `[0, 1]`.
pub fn similarity(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(0.0, 1.0)
}

/// Per-sample attention weights over the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightLedger {
    weights: Vec<f64>,
    last_update: Vec<u64>,
    /// Completed teaching interactions in the current episode.
    interactions: u64,
}

impl WeightLedger {
    /// Uniform `1 / class size` weights, zero interactions.
    pub fn uniform(data: &LabeledDataset) -> Self {
        let counts = data.class_counts();
        let weights = data.samples().iter().map(|s| 1.0 / counts[s.label] as f64).collect();
        Self {
            weights,
            last_update: vec![0; data.len()],
            interactions: 0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, sample: usize) -> f64 {
        self.weights[sample]
    }

    pub fn set_weight(&mut self, sample: usize, w: f64) {
        self.weights[sample] = w;
    }

    pub fn last_update(&self, sample: usize) -> u64 {
        self.last_update[sample]
    }

    pub fn interactions(&self) -> u64 {
        self.interactions
    }

    pub fn complete_interaction(&mut self) {
        self.interactions += 1;
    }

    /// Within-class sampling weights renormalized to sum to one.
    pub fn class_distribution(&self, members: &[usize]) -> Vec<f64> {
        let total: f64 = members.iter().map(|&i| self.weights[i]).sum();
        if total > 0.0 && total.is_finite() {
            members.iter().map(|&i| self.weights[i] / total).collect()
        } else {
            vec![1.0 / members.len() as f64; members.len()]
        }
    }

    /// Moving-average update: in-batch samples take their fresh attention
    /// weight, every other sample `u` of a class present in the batch gets
    /// `(α_prev + Σ_i sim(x_u, x_i) α_i) / Γ`.
    pub fn estimate_unseen(
        &mut self,
        data: &LabeledDataset,
        batch: &MiniBatch,
        in_batch_alphas: &BTreeMap<usize, Vec<f64>>,
    ) -> Result<()> {
        if self.interactions == 0 {
            return Err(Error::invalid(
                "weight ledger has no completed interaction; seed it with a uniform batch",
            ));
        }
        let gamma = self.interactions as f64;
        let by_class = group_by_class(data, batch)?;
        let mut in_batch = vec![false; data.len()];
        for &i in batch.indices() {
            in_batch[i] = true;
        }
        for (class, members) in &by_class {
            let alphas = in_batch_alphas
                .get(class)
                .ok_or_else(|| Error::invalid(format!("missing attention weights for class {class}")))?;
            if alphas.len() != members.len() {
                return Err(Error::Shape {
                    context: "in-batch attention weights",
                    expected: (members.len(), 1),
                    actual: (alphas.len(), 1),
                });
            }
            for s in data
                .samples()
                .iter()
                .filter(|s| s.label == *class && !in_batch[s.index])
            {
                let estimate: f64 = members
                    .iter()
                    .zip(alphas)
                    .map(|(&i, &a)| similarity(&s.features, &data.samples()[i].features) * a)
                    .sum();
                self.weights[s.index] = (self.weights[s.index] + estimate) / gamma;
                self.last_update[s.index] = self.interactions;
            }
            for (&i, &a) in members.iter().zip(alphas) {
                self.weights[i] = a.max(0.0);
                self.last_update[i] = self.interactions;
            }
        }
        Ok(())
    }
}
