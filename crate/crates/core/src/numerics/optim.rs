use serde::{Deserialize, Serialize};

use super::layers::Param;
use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn sgd(lr: f64) -> Self {
        OptimizerKind::Sgd { lr }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer with per-parameter moment buffers, bound to a fixed list of
/// parameter shapes on first use.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    moments: Vec<(Matrix, Matrix)>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            moments: Vec::new(),
            steps: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn reset(&mut self) {
        self.moments.clear();
        self.steps = 0;
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    pub fn step(&mut self, mut params: Vec<&mut Param>) -> Result<()> {
        for p in params.iter() {
            if p.grad.shape() != p.value.shape() {
                return Err(Error::Shape {
                    context: "optimizer gradient",
                    expected: p.value.shape(),
                    actual: p.grad.shape(),
                });
            }
        }
        if let OptimizerKind::Adam { .. } = self.kind {
            if self.moments.is_empty() {
                self.moments = params
                    .iter()
                    .map(|p| {
                        let (r, c) = p.value.shape();
                        (Matrix::zeros(r, c), Matrix::zeros(r, c))
                    })
                    .collect();
            }
            if self.moments.len() != params.len()
                || self
                    .moments
                    .iter()
                    .zip(params.iter())
                    .any(|(m, p)| m.0.shape() != p.value.shape())
            {
                return Err(Error::Shape {
                    context: "optimizer moments",
                    expected: (self.moments.len(), 0),
                    actual: (params.len(), 0),
                });
            }
        }
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd { lr } => {
                for p in params.iter_mut() {
                    let Param { value, grad, .. } = &mut **p;
                    for (w, g) in value.data_mut().iter_mut().zip(grad.data()) {
                        *w -= lr * g;
                    }
                }
            }
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                let t = self.steps as i32;
                let bc1 = 1.0 - beta1.powi(t);
                let bc2 = 1.0 - beta2.powi(t);
                for (p, (m, v)) in params.iter_mut().zip(self.moments.iter_mut()) {
                    let Param { value, grad, .. } = &mut **p;
                    for (((w, &g), mi), vi) in value
                        .data_mut()
                        .iter_mut()
                        .zip(grad.data())
                        .zip(m.data_mut())
                        .zip(v.data_mut())
                    {
                        *mi = beta1 * *mi + (1.0 - beta1) * g;
                        *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                        let mhat = *mi / bc1;
                        let vhat = *vi / bc2;
                        *w -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
        for p in params.iter_mut() {
            p.grad.fill(0.0);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64, g: f64) -> Param {
        let mut p = Param::new("w", Matrix::filled(1, 1, v));
        p.grad.set(0, 0, g);
        p
    }

    #[test]
    fn sgd_single_step() {
        let mut p = scalar(1.0, 1.0);
        Optimizer::new(OptimizerKind::sgd(0.1)).step(vec![&mut p]).unwrap();
        assert!((p.value.get(0, 0) - 0.9).abs() < 1e-15);
        assert_eq!(p.grad.get(0, 0), 0.0);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        for kind in [OptimizerKind::sgd(0.1), OptimizerKind::adam(0.1)] {
            let mut p = scalar(1.25, 0.0);
            Optimizer::new(kind).step(vec![&mut p]).unwrap();
            assert_eq!(p.value.get(0, 0), 1.25);
        }
    }

    #[test]
    fn adam_descends_quadratic() {
        // f(w) = w^2, grad = 2w
        let mut p = scalar(1.0, 0.0);
        let mut opt = Optimizer::new(OptimizerKind::adam(0.01));
        for _ in 0..100 {
            let w = p.value.get(0, 0);
            p.grad.set(0, 0, 2.0 * w);
            opt.step(vec![&mut p]).unwrap();
        }
        assert!(p.value.get(0, 0).abs() < 0.5);
        assert_eq!(opt.steps(), 100);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = scalar(1.0, 1.0);
        p.grad = Matrix::zeros(2, 1);
        assert!(Optimizer::new(OptimizerKind::sgd(0.1)).step(vec![&mut p]).is_err());

        let mut a = scalar(1.0, 1.0);
        let mut opt = Optimizer::new(OptimizerKind::adam(0.1));
        opt.step(vec![&mut a]).unwrap();
        let mut b = Param::new("big", Matrix::zeros(3, 3));
        assert!(opt.step(vec![&mut b]).is_err());
    }
}
