use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::{LabeledDataset, MiniBatch, Sample};
use crate::error::{Error, Result};
use crate::numerics::{
    log_softmax, softmax_unchecked, Activation, Matrix, Mlp, Optimizer, OptimizerKind, Param, Parameterized, Rng,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudentKind {
    Logistic,
    Mlp,
}

impl fmt::Display for StudentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudentKind::Logistic => "logistic",
            StudentKind::Mlp => "mlp",
        })
    }
}

impl FromStr for StudentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(StudentKind::Logistic),
            "mlp" => Ok(StudentKind::Mlp),
            other => Err(Error::Unknown {
                what: "student kind",
                value: other.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudentConfig {
    pub learning_rate: f64,
    pub hidden_units: usize,
}

impl Default for StudentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            hidden_units: 32,
        }
    }
}

/// The learner being taught.
pub trait Student: Send {
    fn kind(&self) -> StudentKind;

    fn num_classes(&self) -> usize;

    /// Raw class scores (logits) for one feature vector.
    fn logits(&self, features: &[f64]) -> Vec<f64>;

    /// One SGD step on the mean cross-entropy of `batch`; returns the
    /// pre-step mean loss.
    fn train_on_batch(&mut self, data: &LabeledDataset, batch: &MiniBatch) -> Result<f64>;

    /// Redraws parameters and clears optimizer state.
    fn reinitialize(&mut self, rng: &mut Rng);

    fn probabilities(&self, features: &[f64]) -> Vec<f64> {
        softmax_unchecked(&self.logits(features))
    }

    /// Argmax prediction; ties go to the lowest class id.
    fn predict(&self, features: &[f64]) -> usize {
        argmax(&self.logits(features))
    }

    /// Cross-entropy of one sample under the current parameters.
    fn sample_loss(&self, sample: &Sample) -> f64 {
        let lp = log_softmax(&self.logits(&sample.features));
        (-lp[sample.label]).max(0.0)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Softmax classifier over a dense network: a single affine layer for the
/// logistic student, a tanh hidden layer for the MLP student.
#[derive(Debug, Clone)]
pub struct NeuralStudent {
    kind: StudentKind,
    sizes: Vec<usize>,
    net: Mlp,
    opt: Optimizer,
    learning_rate: f64,
}

impl NeuralStudent {
    pub fn new(
        kind: StudentKind,
        feature_dim: usize,
        num_classes: usize,
        config: &StudentConfig,
        rng: &mut Rng,
    ) -> Self {
        let sizes = match kind {
            StudentKind::Logistic => vec![feature_dim, num_classes],
            StudentKind::Mlp => vec![feature_dim, config.hidden_units, num_classes],
        };
        let net = Mlp::new("student", &sizes, Activation::Tanh, Activation::Identity, rng);
        Self {
            kind,
            sizes,
            net,
            opt: Optimizer::new(OptimizerKind::sgd(config.learning_rate)),
            learning_rate: config.learning_rate,
        }
    }

    pub fn logistic(feature_dim: usize, num_classes: usize, config: &StudentConfig, rng: &mut Rng) -> Self {
        Self::new(StudentKind::Logistic, feature_dim, num_classes, config, rng)
    }

    pub fn mlp(feature_dim: usize, num_classes: usize, config: &StudentConfig, rng: &mut Rng) -> Self {
        Self::new(StudentKind::Mlp, feature_dim, num_classes, config, rng)
    }

    fn batch_inputs(&self, data: &LabeledDataset, batch: &MiniBatch) -> Result<(Matrix, Vec<usize>)> {
        let mut x = Matrix::zeros(batch.len(), self.sizes[0]);
        let mut labels = Vec::with_capacity(batch.len());
        for (row, &i) in batch.indices().iter().enumerate() {
            let s = data.sample(i)?;
            if s.label >= self.num_classes() {
                return Err(Error::LabelOutOfRange {
                    label: s.label,
                    num_classes: self.num_classes(),
                });
            }
            if s.features.len() != self.sizes[0] {
                return Err(Error::Shape {
                    context: "student input",
                    expected: (self.sizes[0], 1),
                    actual: (s.features.len(), 1),
                });
            }
            x.row_mut(row).copy_from_slice(&s.features);
            labels.push(s.label);
        }
        Ok((x, labels))
    }

    /// Mean cross-entropy over `batch` with gradients accumulated into the
    /// network; does not step the optimizer.
    pub fn loss_and_grad(&mut self, data: &LabeledDataset, batch: &MiniBatch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        let (x, labels) = self.batch_inputs(data, batch)?;
        let logits = self.net.forward(&x)?;
        let n = labels.len() as f64;
        let mut grad = Matrix::zeros(logits.rows(), logits.cols());
        let mut loss = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let row = logits.row(r);
            let lp = log_softmax(row);
            loss -= lp[y];
            let g = grad.row_mut(r);
            for (k, gk) in g.iter_mut().enumerate() {
                *gk = (lp[k].exp() - if k == y { 1.0 } else { 0.0 }) / n;
            }
        }
        self.net.backward(&grad)?;
        Ok(loss / n)
    }

    /// Mean cross-entropy without touching gradients.
    pub fn batch_loss(&self, data: &LabeledDataset, batch: &MiniBatch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let mut total = 0.0;
        for &i in batch.indices() {
            total += self.sample_loss(data.sample(i)?);
        }
        Ok(total / batch.len() as f64)
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }
}

impl Parameterized for NeuralStudent {
    fn params(&self) -> Vec<&Param> {
        self.net.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.params_mut()
    }
}

impl Student for NeuralStudent {
    fn kind(&self) -> StudentKind {
        self.kind
    }

    fn num_classes(&self) -> usize {
        *self.sizes.last().expect("sizes non-empty")
    }

    fn logits(&self, features: &[f64]) -> Vec<f64> {
        let x = Matrix::row_vector(features);
        self.net
            .infer(&x)
            .map(Matrix::into_vec)
            .unwrap_or_else(|_| vec![0.0; self.num_classes()])
    }

    fn train_on_batch(&mut self, data: &LabeledDataset, batch: &MiniBatch) -> Result<f64> {
        self.net.zero_grad();
        let loss = self.loss_and_grad(data, batch)?;
        self.opt.step(self.net.params_mut())?;
        Ok(loss)
    }

    fn reinitialize(&mut self, rng: &mut Rng) {
        self.net = Mlp::new("student", &self.sizes, Activation::Tanh, Activation::Identity, rng);
        self.opt.reset();
    }
}

pub fn build_student(
    kind: StudentKind,
    feature_dim: usize,
    num_classes: usize,
    config: &StudentConfig,
    rng: &mut Rng,
) -> Box<dyn Student> {
    Box::new(NeuralStudent::new(kind, feature_dim, num_classes, config, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_check;

    fn toy() -> LabeledDataset {
        let samples = vec![
            Sample {
                index: 0,
                features: vec![1.0, 0.5],
                label: 0,
                concept: None,
            },
            Sample {
                index: 1,
                features: vec![-1.0, -0.5],
                label: 1,
                concept: None,
            },
        ];
        LabeledDataset::new(samples, 2).unwrap()
    }

    fn zeroed(mut s: NeuralStudent) -> NeuralStudent {
        for p in s.params_mut() {
            p.value.fill(0.0);
        }
        s
    }

    #[test]
    fn uniform_predictor_losses() {
        let cfg = StudentConfig::default();
        let mut rng = Rng::new(0);
        let data = toy();
        let mut s = zeroed(NeuralStudent::logistic(2, 2, &cfg, &mut rng));
        let batch = MiniBatch::new(vec![0, 1], &data).unwrap();
        let loss = s.train_on_batch(&data, &batch).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-12);

        let s4 = zeroed(NeuralStudent::logistic(2, 4, &cfg, &mut rng));
        let sample = Sample {
            index: 0,
            features: vec![0.3, 0.1],
            label: 3,
            concept: None,
        };
        assert!((s4.sample_loss(&sample) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn separable_pair_loss_strictly_decreases() {
        let data = toy();
        let batch = MiniBatch::new(vec![0, 1], &data).unwrap();
        let mut rng = Rng::new(11);
        for kind in [StudentKind::Logistic, StudentKind::Mlp] {
            let mut s = NeuralStudent::new(kind, 2, 2, &StudentConfig::default(), &mut rng);
            let mut prev = f64::INFINITY;
            for _ in 0..50 {
                let loss = s.train_on_batch(&data, &batch).unwrap();
                assert!(loss < prev, "{kind}: {loss} >= {prev}");
                prev = loss;
            }
        }
    }

    #[test]
    fn empty_batch_and_bad_label_error() {
        let data = toy();
        let mut rng = Rng::new(0);
        let mut s = NeuralStudent::logistic(2, 2, &StudentConfig::default(), &mut rng);
        let empty = MiniBatch::new(vec![], &data).unwrap();
        assert!(matches!(s.train_on_batch(&data, &empty), Err(Error::Empty(_))));
        // dataset with three classes fed to a binary student
        let three = LabeledDataset::new(
            vec![Sample {
                index: 0,
                features: vec![0.0, 1.0],
                label: 2,
                concept: None,
            }],
            3,
        )
        .unwrap();
        let b = MiniBatch::new(vec![0], &three).unwrap();
        assert!(matches!(
            s.train_on_batch(&three, &b),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn confident_correct_prediction_has_zero_loss() {
        let mut rng = Rng::new(2);
        let mut s = zeroed(NeuralStudent::logistic(1, 2, &StudentConfig::default(), &mut rng));
        s.params_mut()[1].value.set(0, 0, 800.0);
        let sample = Sample {
            index: 0,
            features: vec![0.0],
            label: 0,
            concept: None,
        };
        assert_eq!(s.sample_loss(&sample), 0.0);
    }

    #[test]
    fn reinitialize_is_seeded() {
        let mut rng = Rng::new(0);
        let mut s = NeuralStudent::mlp(3, 2, &StudentConfig::default(), &mut rng);
        s.reinitialize(&mut Rng::new(5));
        let a = s.checksum();
        s.reinitialize(&mut Rng::new(5));
        assert_eq!(a, s.checksum());
        s.reinitialize(&mut Rng::new(6));
        assert_ne!(a, s.checksum());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let data = toy();
        let batch = MiniBatch::new(vec![0, 1], &data).unwrap();
        for seed in 0..3 {
            let mut rng = Rng::new(seed);
            for kind in [StudentKind::Logistic, StudentKind::Mlp] {
                let mut s = NeuralStudent::new(kind, 2, 2, &StudentConfig::default(), &mut rng);
                let report = finite_diff_check(
                    &mut s,
                    |st, want| {
                        if want {
                            st.loss_and_grad(&data, &batch)
                        } else {
                            st.batch_loss(&data, &batch)
                        }
                    },
                    1e-5,
                    1e-3,
                )
                .unwrap();
                assert!(report.pass, "{kind} seed {seed}: {report:?}");
            }
        }
    }
}
