//! Key-value memory knowledge tracing.
//!
//! A static key matrix encodes latent concepts; a dynamic value matrix holds
//! the student's mastery of each concept. The read stage predicts the
//! student's loss on a sample, the write stage absorbs whether the student
//! got the sample right through gated erase and add signals.
//!
//! The value matrix is state rather than a parameter. Training backpropagates
//! through the reads of the current batch and through the writes applied
//! since the previous training step, never further back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    dot, sigmoid, softmax_backward, softmax_unchecked, Matrix, Optimizer, OptimizerKind, Param, Parameterized, Rng,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KtConfig {
    pub key_dim: usize,
    pub value_dim: usize,
    pub learning_rate: f64,
}

impl Default for KtConfig {
    fn default() -> Self {
        Self {
            key_dim: 50,
            value_dim: 50,
            learning_rate: 0.005,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KeyValueMemory {
    /// `N x d_k`, trainable.
    pub keys: Param,
    /// `N x d_v`, mastery state.
    pub values: Matrix,
}

impl KeyValueMemory {
    pub fn num_concepts(&self) -> usize {
        self.keys.value.rows()
    }
}

/// Trainable weights of the tracer other than the key matrix.
#[derive(Debug, Clone)]
pub struct KtParams {
    /// Sample embedding, `|D| x d_k`.
    pub embed_sample: Param,
    /// Outcome embedding, `2|D| x d_v`; row `s + pred_error * |D|`.
    pub embed_outcome: Param,
    /// Representation layer, `(d_v + d_k) x N` and `1 x N`.
    pub repr_w: Param,
    pub repr_b: Param,
    /// Loss head, `N x |D|` and `1 x |D|`, gathered per sample.
    pub loss_w: Param,
    pub loss_b: Param,
    /// Erase gate, `(N + d_v) x d_v`.
    pub erase_w: Param,
    pub erase_b: Param,
    /// Add signal, `(N + d_v) x d_v`.
    pub add_w: Param,
    pub add_b: Param,
}

/// Per-sample knowledge representation `f`, entries in `(-1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeVector {
    pub values: Vec<f64>,
    pub sample: usize,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadOut {
    pub knowledge: KnowledgeVector,
    pub est_loss: f64,
    pub relevancy: Vec<f64>,
}

#[derive(Debug, Clone)]
struct ReadCache {
    sample: usize,
    u: Vec<f64>,
    w: Vec<f64>,
    r: Vec<f64>,
    f: Vec<f64>,
}

#[derive(Debug, Clone)]
struct WriteCache {
    read: ReadCache,
    outcome_row: usize,
    v: Vec<f64>,
    erase: Vec<f64>,
    add: Vec<f64>,
    /// Memory before this write.
    before: Matrix,
}

/// Applies the erase-then-add update to every slot:
/// `M(i) <- M(i) * (1 - w(i) e) + w(i) a`.
pub fn erase_add(values: &mut Matrix, relevancy: &[f64], erase: &[f64], add: &[f64]) {
    for (i, &wi) in relevancy.iter().enumerate() {
        for ((m, &e), &a) in values.row_mut(i).iter_mut().zip(erase).zip(add) {
            *m = *m * (1.0 - wi * e) + wi * a;
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeTracer {
    num_samples: usize,
    config: KtConfig,
    memory: KeyValueMemory,
    params: KtParams,
    opt: Optimizer,
    /// Memory at the last training step and the writes applied since.
    base: Matrix,
    pending: Vec<(usize, u8)>,
    clock: u64,
}

impl KnowledgeTracer {
    pub fn new(num_samples: usize, num_concepts: usize, config: KtConfig, rng: &mut Rng) -> Result<Self> {
        if num_samples == 0 || num_concepts == 0 || config.key_dim == 0 || config.value_dim == 0 {
            return Err(Error::invalid("knowledge tracer dimensions must be positive"));
        }
        let (d, n, dk, dv) = (num_samples, num_concepts, config.key_dim, config.value_dim);
        let keys = Param::uniform("kt.keys", n, dk, dk, rng);
        let values = Param::uniform("kt.values", n, dv, dv, rng).value;
        let params = KtParams {
            embed_sample: Param::uniform("kt.embed_sample", d, dk, dk, rng),
            embed_outcome: Param::uniform("kt.embed_outcome", 2 * d, dv, dv, rng),
            repr_w: Param::uniform("kt.repr_w", dv + dk, n, dv + dk, rng),
            repr_b: Param::uniform("kt.repr_b", 1, n, dv + dk, rng),
            loss_w: Param::uniform("kt.loss_w", n, d, n, rng),
            loss_b: Param::uniform("kt.loss_b", 1, d, n, rng),
            erase_w: Param::uniform("kt.erase_w", n + dv, dv, n + dv, rng),
            erase_b: Param::uniform("kt.erase_b", 1, dv, n + dv, rng),
            add_w: Param::uniform("kt.add_w", n + dv, dv, n + dv, rng),
            add_b: Param::uniform("kt.add_b", 1, dv, n + dv, rng),
        };
        Ok(Self {
            num_samples,
            config,
            base: values.clone(),
            memory: KeyValueMemory { keys, values },
            params,
            opt: Optimizer::new(OptimizerKind::adam(config.learning_rate)),
            pending: Vec::new(),
            clock: 0,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn num_concepts(&self) -> usize {
        self.memory.num_concepts()
    }

    pub fn config(&self) -> &KtConfig {
        &self.config
    }

    pub fn memory(&self) -> &KeyValueMemory {
        &self.memory
    }

    pub fn memory_mut(&mut self) -> &mut KeyValueMemory {
        &mut self.memory
    }

    pub fn kt_params(&self) -> &KtParams {
        &self.params
    }

    pub fn kt_params_mut(&mut self) -> &mut KtParams {
        &mut self.params
    }

    fn check_sample(&self, sample: usize) -> Result<()> {
        if sample >= self.num_samples {
            return Err(Error::IndexOutOfRange {
                index: sample,
                len: self.num_samples,
            });
        }
        Ok(())
    }

    /// Softmax over `<u, key_i>` for the sample's embedding `u`.
    pub fn relevancy(&self, sample: usize) -> Result<Vec<f64>> {
        self.check_sample(sample)?;
        let u = self.params.embed_sample.value.row(sample);
        let z = self.memory.keys.value.mul_vec(u)?;
        Ok(softmax_unchecked(&z))
    }

    fn read_forward(&self, values: &Matrix, sample: usize) -> ReadCache {
        let u = self.params.embed_sample.value.row(sample).to_vec();
        let z: Vec<f64> = (0..self.num_concepts())
            .map(|i| dot(&u, self.memory.keys.value.row(i)))
            .collect();
        let w = softmax_unchecked(&z);
        let mut r = vec![0.0; self.config.value_dim];
        for (i, &wi) in w.iter().enumerate() {
            for (rd, m) in r.iter_mut().zip(values.row(i)) {
                *rd += wi * m;
            }
        }
        let mut x = r.clone();
        x.extend_from_slice(&u);
        let pre = self.params.repr_w.value.vec_mul(&x).expect("repr shape");
        let f = pre
            .iter()
            .zip(self.params.repr_b.value.data())
            .map(|(p, b)| (p + b).tanh())
            .collect();
        ReadCache { sample, u, w, r, f }
    }

    fn est_loss(&self, cache: &ReadCache) -> f64 {
        let s = cache.sample;
        let col: f64 = cache
            .f
            .iter()
            .enumerate()
            .map(|(i, fi)| fi * self.params.loss_w.value.get(i, s))
            .sum();
        col + self.params.loss_b.value.get(0, s)
    }

    /// Read stage on the current value matrix. Side-effect free.
    pub fn read(&self, sample: usize) -> Result<ReadOut> {
        self.check_sample(sample)?;
        let cache = self.read_forward(&self.memory.values, sample);
        let est_loss = self.est_loss(&cache);
        Ok(ReadOut {
            knowledge: KnowledgeVector {
                values: cache.f.clone(),
                sample,
                timestamp: self.clock,
            },
            est_loss,
            relevancy: cache.w,
        })
    }

    fn write_forward(&self, values: &Matrix, sample: usize, pred_error: u8) -> WriteCache {
        let read = self.read_forward(values, sample);
        let outcome_row = sample + pred_error as usize * self.num_samples;
        let mut v = read.f.clone();
        v.extend_from_slice(self.params.embed_outcome.value.row(outcome_row));
        let pre_e = self.params.erase_w.value.vec_mul(&v).expect("erase shape");
        let erase: Vec<f64> = pre_e
            .iter()
            .zip(self.params.erase_b.value.data())
            .map(|(p, b)| sigmoid(p + b))
            .collect();
        let pre_a = self.params.add_w.value.vec_mul(&v).expect("add shape");
        let add: Vec<f64> = pre_a
            .iter()
            .zip(self.params.add_b.value.data())
            .map(|(p, b)| (p + b).tanh())
            .collect();
        WriteCache {
            read,
            outcome_row,
            v,
            erase,
            add,
            before: values.clone(),
        }
    }

    /// Write stage: absorbs a binarized outcome (0 correct, 1 incorrect)
    /// into the value matrix.
    pub fn write(&mut self, sample: usize, pred_error: u8) -> Result<()> {
        self.check_sample(sample)?;
        if pred_error > 1 {
            return Err(Error::invalid(format!("pred_error must be 0 or 1, got {pred_error}")));
        }
        let cache = self.write_forward(&self.memory.values, sample, pred_error);
        erase_add(&mut self.memory.values, &cache.read.w, &cache.erase, &cache.add);
        if !self.memory.values.is_finite() {
            return Err(Error::NonFinite("value memory"));
        }
        self.pending.push((sample, pred_error));
        self.clock += 1;
        Ok(())
    }

    /// Erase and add signals the next write of `(sample, pred_error)` would use.
    pub fn write_signals(&self, sample: usize, pred_error: u8) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.check_sample(sample)?;
        if pred_error > 1 {
            return Err(Error::invalid(format!("pred_error must be 0 or 1, got {pred_error}")));
        }
        let c = self.write_forward(&self.memory.values, sample, pred_error);
        Ok((c.read.w, c.erase, c.add))
    }

    /// Redraws the value matrix; keys and parameters are untouched.
    pub fn reset_value_memory(&mut self, rng: &mut Rng) {
        let (n, dv) = self.memory.values.shape();
        self.memory.values = Param::uniform("kt.values", n, dv, dv, rng).value;
        self.base = self.memory.values.clone();
        self.pending.clear();
    }

    /// Replays pending writes from the base memory with current parameters.
    fn replay(&self) -> (Vec<WriteCache>, Matrix) {
        let mut values = self.base.clone();
        let mut caches = Vec::with_capacity(self.pending.len());
        for &(s, e) in &self.pending {
            let c = self.write_forward(&values, s, e);
            erase_add(&mut values, &c.read.w, &c.erase, &c.add);
            caches.push(c);
        }
        (caches, values)
    }

    fn check_batch(&self, batch: &[usize], actual: &[f64]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Empty("knowledge tracing batch"));
        }
        if batch.len() != actual.len() {
            return Err(Error::Shape {
                context: "actual losses",
                expected: (batch.len(), 1),
                actual: (actual.len(), 1),
            });
        }
        for &s in batch {
            self.check_sample(s)?;
        }
        Ok(())
    }

    /// RMSE between estimated and actual losses over `batch`.
    pub fn kt_loss(&self, batch: &[usize], actual: &[f64]) -> Result<f64> {
        self.check_batch(batch, actual)?;
        let (_, values) = self.replay();
        let sq: f64 = batch
            .iter()
            .zip(actual)
            .map(|(&s, &l)| {
                let c = self.read_forward(&values, s);
                (self.est_loss(&c) - l).powi(2)
            })
            .sum();
        Ok((sq / batch.len() as f64).sqrt())
    }

    /// RMSE plus gradients accumulated into every trainable parameter.
    pub fn kt_loss_and_grad(&mut self, batch: &[usize], actual: &[f64]) -> Result<f64> {
        self.check_batch(batch, actual)?;
        let (writes, values) = self.replay();
        let reads: Vec<ReadCache> = batch.iter().map(|&s| self.read_forward(&values, s)).collect();
        let diffs: Vec<f64> = reads.iter().zip(actual).map(|(c, &l)| self.est_loss(c) - l).collect();
        let n = batch.len() as f64;
        let rmse = (diffs.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
        if !rmse.is_finite() {
            return Err(Error::NonFinite("knowledge tracing loss"));
        }
        if rmse == 0.0 {
            return Ok(0.0);
        }

        let (nc, dv) = values.shape();
        let mut d_values = Matrix::zeros(nc, dv);
        for (c, d) in reads.iter().zip(&diffs) {
            let g = d / (n * rmse);
            let s = c.sample;
            let mut df = vec![0.0; nc];
            for (i, dfi) in df.iter_mut().enumerate() {
                *dfi = g * self.params.loss_w.value.get(i, s);
                self.params.loss_w.grad.add_at(i, s, g * c.f[i]);
            }
            self.params.loss_b.grad.add_at(0, s, g);
            self.read_backward(c, &values, &df, &vec![0.0; nc], &mut d_values);
        }

        for wc in writes.iter().rev() {
            d_values = self.write_backward(wc, &d_values);
        }
        Ok(rmse)
    }

    /// Backward through the read path. `extra_dw` is an upstream gradient on
    /// the relevancy vector; `d_values` accumulates `dL/dM`.
    fn read_backward(&mut self, c: &ReadCache, values: &Matrix, df: &[f64], extra_dw: &[f64], d_values: &mut Matrix) {
        let dv = self.config.value_dim;
        let dpre: Vec<f64> = df.iter().zip(&c.f).map(|(g, f)| g * (1.0 - f * f)).collect();
        let mut x = c.r.clone();
        x.extend_from_slice(&c.u);
        self.params.repr_w.grad.add_outer(&x, &dpre, 1.0).expect("repr grad");
        for (b, g) in self.params.repr_b.grad.data_mut().iter_mut().zip(&dpre) {
            *b += g;
        }
        let dx = self.params.repr_w.value.mul_vec(&dpre).expect("repr back");
        let (dr, du_direct) = dx.split_at(dv);

        let mut dw = extra_dw.to_vec();
        for (i, dwi) in dw.iter_mut().enumerate() {
            *dwi += dot(dr, values.row(i));
            for (g, r) in d_values.row_mut(i).iter_mut().zip(dr) {
                *g += c.w[i] * r;
            }
        }
        let dz = softmax_backward(&c.w, &dw);
        let mut du = du_direct.to_vec();
        for (i, &dzi) in dz.iter().enumerate() {
            for (g, k) in du.iter_mut().zip(self.memory.keys.value.row(i)) {
                *g += dzi * k;
            }
            for (g, u) in self.memory.keys.grad.row_mut(i).iter_mut().zip(&c.u) {
                *g += dzi * u;
            }
        }
        for (g, d) in self.params.embed_sample.grad.row_mut(c.sample).iter_mut().zip(&du) {
            *g += d;
        }
    }

    /// Backward through one write; returns `dL/dM` before the write.
    fn write_backward(&mut self, wc: &WriteCache, d_after: &Matrix) -> Matrix {
        let (nc, dv) = d_after.shape();
        let before = &wc.before;
        let w = &wc.read.w;
        let mut d_before = Matrix::zeros(nc, dv);
        let mut dw = vec![0.0; nc];
        let mut de = vec![0.0; dv];
        let mut da = vec![0.0; dv];
        for i in 0..nc {
            let g = d_after.row(i);
            let m = before.row(i);
            for d in 0..dv {
                dw[i] += g[d] * (wc.add[d] - m[d] * wc.erase[d]);
                de[d] -= g[d] * m[d] * w[i];
                da[d] += g[d] * w[i];
                d_before.set(i, d, g[d] * (1.0 - w[i] * wc.erase[d]));
            }
        }
        let dpre_e: Vec<f64> = de.iter().zip(&wc.erase).map(|(g, e)| g * e * (1.0 - e)).collect();
        let dpre_a: Vec<f64> = da.iter().zip(&wc.add).map(|(g, a)| g * (1.0 - a * a)).collect();
        self.params
            .erase_w
            .grad
            .add_outer(&wc.v, &dpre_e, 1.0)
            .expect("erase grad");
        self.params.add_w.grad.add_outer(&wc.v, &dpre_a, 1.0).expect("add grad");
        for (b, g) in self.params.erase_b.grad.data_mut().iter_mut().zip(&dpre_e) {
            *b += g;
        }
        for (b, g) in self.params.add_b.grad.data_mut().iter_mut().zip(&dpre_a) {
            *b += g;
        }
        let mut d_v = self.params.erase_w.value.mul_vec(&dpre_e).expect("erase back");
        for (a, b) in d_v
            .iter_mut()
            .zip(self.params.add_w.value.mul_vec(&dpre_a).expect("add back"))
        {
            *a += b;
        }
        let (df, dj) = d_v.split_at(nc);
        for (g, d) in self
            .params
            .embed_outcome
            .grad
            .row_mut(wc.outcome_row)
            .iter_mut()
            .zip(dj)
        {
            *g += d;
        }
        self.read_backward(&wc.read, before, df, &dw, &mut d_before);
        d_before
    }

    /// One optimizer step on the RMSE between estimated and actual losses;
    /// returns the pre-step RMSE.
    pub fn kt_train_step(&mut self, batch: &[usize], actual: &[f64]) -> Result<f64> {
        self.zero_grad();
        let rmse = self.kt_loss_and_grad(batch, actual)?;
        self.opt.step(param_list(&mut self.memory, &mut self.params))?;
        self.base = self.memory.values.clone();
        self.pending.clear();
        Ok(rmse)
    }
}

impl Parameterized for KnowledgeTracer {
    fn params(&self) -> Vec<&Param> {
        let p = &self.params;
        vec![
            &self.memory.keys,
            &p.embed_sample,
            &p.embed_outcome,
            &p.repr_w,
            &p.repr_b,
            &p.loss_w,
            &p.loss_b,
            &p.erase_w,
            &p.erase_b,
            &p.add_w,
            &p.add_b,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        param_list(&mut self.memory, &mut self.params)
    }
}

fn param_list<'a>(memory: &'a mut KeyValueMemory, p: &'a mut KtParams) -> Vec<&'a mut Param> {
    vec![
        &mut memory.keys,
        &mut p.embed_sample,
        &mut p.embed_outcome,
        &mut p.repr_w,
        &mut p.repr_b,
        &mut p.loss_w,
        &mut p.loss_b,
        &mut p.erase_w,
        &mut p.erase_b,
        &mut p.add_w,
        &mut p.add_b,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_check;

    fn small(seed: u64) -> KnowledgeTracer {
        let cfg = KtConfig {
            key_dim: 5,
            value_dim: 4,
            learning_rate: 0.01,
        };
        KnowledgeTracer::new(6, 4, cfg, &mut Rng::new(seed)).unwrap()
    }

    #[test]
    fn zero_embedding_gives_uniform_relevancy() {
        let mut kt = small(0);
        kt.params.embed_sample.value.row_mut(2).fill(0.0);
        let w = kt.relevancy(2).unwrap();
        assert!(w.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn hand_softmax_relevancy() {
        let cfg = KtConfig {
            key_dim: 2,
            value_dim: 2,
            learning_rate: 0.01,
        };
        let mut kt = KnowledgeTracer::new(1, 2, cfg, &mut Rng::new(0)).unwrap();
        kt.memory.keys.value = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        kt.params.embed_sample.value = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let w = kt.relevancy(0).unwrap();
        assert!((w[0] - 0.7311).abs() < 1e-4 && (w[1] - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn read_vector_is_weighted_sum() {
        let cfg = KtConfig {
            key_dim: 2,
            value_dim: 2,
            learning_rate: 0.01,
        };
        let mut kt = KnowledgeTracer::new(1, 2, cfg, &mut Rng::new(0)).unwrap();
        kt.memory.keys.value = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        kt.memory.values = Matrix::from_rows(&[vec![1.0, 1.0], vec![3.0, 5.0]]).unwrap();
        let c = kt.read_forward(&kt.memory.values, 0);
        assert_eq!(c.w, vec![0.5, 0.5]);
        assert_eq!(c.r, vec![2.0, 3.0]);

        // one-hot relevancy selects the slot exactly
        kt.memory.keys.value = Matrix::from_rows(&[vec![1000.0, 0.0], vec![-1000.0, 0.0]]).unwrap();
        kt.params.embed_sample.value = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let c = kt.read_forward(&kt.memory.values, 0);
        assert_eq!(c.w, vec![1.0, 0.0]);
        assert_eq!(c.r, vec![1.0, 1.0]);
    }

    #[test]
    fn read_is_side_effect_free_and_bounded() {
        let kt = small(3);
        let a = kt.read(1).unwrap();
        let b = kt.read(1).unwrap();
        assert_eq!(a, b);
        assert!(a.knowledge.values.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn erase_add_edge_cases() {
        let start = Matrix::from_rows(&[vec![0.3, -0.2], vec![0.9, 0.4]]).unwrap();
        let mut m = start.clone();
        erase_add(&mut m, &[0.6, 0.4], &[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(m, start);
        let mut m = start.clone();
        erase_add(&mut m, &[1.0, 0.0], &[1.0, 1.0], &[0.7, -0.1]);
        assert_eq!(m.row(0), &[0.7, -0.1]);
        assert_eq!(m.row(1), start.row(1));
    }

    #[test]
    fn write_rejects_bad_outcome_and_touches_only_values() {
        let mut kt = small(4);
        assert!(kt.write(0, 2).is_err());
        let before = kt.checksum();
        let values_before = kt.memory.values.clone();
        kt.write(0, 1).unwrap();
        assert_eq!(before, kt.checksum());
        assert_ne!(values_before, kt.memory.values);
    }

    #[test]
    fn rmse_hand_values() {
        let mut kt = small(1);
        // force est_loss = loss_b by zeroing the loss weights
        kt.params.loss_w.value.fill(0.0);
        kt.params.loss_b.value.fill(0.0);
        kt.params.loss_b.value.set(0, 0, 1.0);
        let r = kt.kt_loss(&[0, 1], &[0.0, 0.0]).unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-12);

        let perfect = kt.kt_loss_and_grad(&[0, 1], &[1.0, 0.0]).unwrap();
        assert_eq!(perfect, 0.0);
        assert!(kt.params().iter().all(|p| p.grad.data().iter().all(|&g| g == 0.0)));
        assert!(kt.kt_train_step(&[], &[]).is_err());
    }

    #[test]
    fn replay_reproduces_stored_memory() {
        let mut kt = small(8);
        kt.write(0, 0).unwrap();
        kt.write(3, 1).unwrap();
        kt.write(0, 1).unwrap();
        let (_, replayed) = kt.replay();
        assert_eq!(replayed, kt.memory.values);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            let mut kt = small(seed);
            kt.write(1, 0).unwrap();
            kt.write(4, 1).unwrap();
            let batch = [1, 2, 4];
            let actual = [0.7, 0.1, 1.3];
            let report = finite_diff_check(
                &mut kt,
                |m, want| {
                    if want {
                        m.kt_loss_and_grad(&batch, &actual)
                    } else {
                        m.kt_loss(&batch, &actual)
                    }
                },
                1e-5,
                1e-3,
            )
            .unwrap();
            assert!(report.pass, "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn reset_value_memory_keeps_keys() {
        let mut kt = small(2);
        let keys = kt.memory.keys.value.clone();
        let sum = kt.checksum();
        kt.reset_value_memory(&mut Rng::new(10));
        let a = kt.memory.values.clone();
        kt.reset_value_memory(&mut Rng::new(10));
        assert_eq!(a, kt.memory.values);
        assert_eq!(keys, kt.memory.keys.value);
        assert_eq!(sum, kt.checksum());
        assert!(kt.read(5).unwrap().est_loss.is_finite());
    }
}
