use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::matrix::Matrix;
use super::rng::Rng;
use crate::error::{Error, Result};

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    #[serde(skip, default = "empty_matrix")]
    pub grad: Matrix,
}

fn empty_matrix() -> Matrix {
    Matrix::zeros(0, 0)
}

impl Param {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn uniform(name: impl Into<String>, rows: usize, cols: usize, fan_in: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let mut value = Matrix::zeros(rows, cols);
        for x in value.data_mut() {
            *x = rng.uniform_range(-bound, bound);
        }
        Self::new(name, value)
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self::new(name, Matrix::zeros(rows, cols))
    }

    pub fn zero_grad(&mut self) {
        if self.grad.shape() != self.value.shape() {
            self.grad = Matrix::zeros(self.value.rows(), self.value.cols());
        } else {
            self.grad.fill(0.0);
        }
    }
}

/// Anything owning a set of [`Param`]s.
pub trait Parameterized {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_parameters(&self) -> usize {
        self.params().iter().map(|p| p.value.data().len()).sum()
    }

    /// FNV-1a over the bit patterns of every parameter value.
    fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for p in self.params() {
            for x in p.value.data() {
                for b in x.to_bits().to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }

    /// `self <- tau * source + (1 - tau) * self`, parameter by parameter.
    fn soft_update_from(&mut self, source: &dyn Parameterized, tau: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::invalid(format!(
                "soft update rate must lie in [0, 1], got {tau}"
            )));
        }
        let src = source.params();
        let mut dst = self.params_mut();
        if src.len() != dst.len() {
            return Err(Error::invalid("soft update between differently shaped blocks"));
        }
        for (d, s) in dst.iter_mut().zip(src) {
            d.value.lerp_towards(&s.value, tau)?;
        }
        Ok(())
    }
}

/// Affine layer `y = x W + b` over row-major batches (one sample per row).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
    #[serde(skip)]
    input: Option<Matrix>,
}

impl Linear {
    pub fn new(name: &str, inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        Self {
            weight: Param::uniform(format!("{name}.weight"), inputs, outputs, inputs, rng),
            bias: Param::uniform(format!("{name}.bias"), 1, outputs, inputs, rng),
            input: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = x.matmul(&self.weight.value)?;
        y.add_row_broadcast(&self.bias.value)?;
        Ok(y)
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        let y = self.infer(x)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward(&mut self, grad_out: &Matrix) -> Result<Matrix> {
        let x = self.input.as_ref().ok_or(Error::NoForwardCache("Linear"))?;
        let gw = x.t_matmul(grad_out)?;
        self.weight.grad.add_assign(&gw)?;
        self.bias.grad.add_assign(&grad_out.sum_rows())?;
        grad_out.matmul_t(&self.weight.value)
    }
}

impl Parameterized for Linear {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Stack of dense layers with per-layer activations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Linear>,
    activations: Vec<Activation>,
    #[serde(skip)]
    outputs: Vec<Matrix>,
}

impl Mlp {
    /// `sizes = [in, h1, ..., out]`; hidden layers use `hidden`, the last
    /// layer uses `output`.
    pub fn new(name: &str, sizes: &[usize], hidden: Activation, output: Activation, rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| Linear::new(&format!("{name}.{i}"), sizes[i], sizes[i + 1], rng))
            .collect();
        let activations = (0..n).map(|i| if i + 1 == n { output } else { hidden }).collect();
        Self {
            layers,
            activations,
            outputs: Vec::new(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            h = layer.infer(&h)?.map(|z| act.apply(z));
        }
        Ok(h)
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        self.outputs.clear();
        let mut h = x.clone();
        for (layer, act) in self.layers.iter_mut().zip(&self.activations) {
            h = layer.forward(&h)?.map(|z| act.apply(z));
            self.outputs.push(h.clone());
        }
        Ok(h)
    }

    /// Accumulates gradients for every layer and returns `dL/dx`.
    pub fn backward(&mut self, grad_out: &Matrix) -> Result<Matrix> {
        if self.outputs.len() != self.layers.len() {
            return Err(Error::NoForwardCache("Mlp"));
        }
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            let act = self.activations[i];
            let y = &self.outputs[i];
            if act != Activation::Identity {
                for (gi, &yi) in g.data_mut().iter_mut().zip(y.data()) {
                    *gi *= act.derivative_from_output(yi);
                }
            }
            g = self.layers[i].backward(&g)?;
        }
        Ok(g)
    }
}

impl Parameterized for Mlp {
    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_before_forward_is_an_error() {
        let mut rng = Rng::new(0);
        let mut l = Linear::new("l", 2, 3, &mut rng);
        assert!(matches!(
            l.backward(&Matrix::zeros(1, 3)),
            Err(Error::NoForwardCache(_))
        ));
        let mut m = Mlp::new("m", &[2, 3, 1], Activation::Tanh, Activation::Identity, &mut rng);
        assert!(m.backward(&Matrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn init_in_fan_in_bounds() {
        let mut rng = Rng::new(3);
        let p = Param::uniform("w", 16, 8, 16, &mut rng);
        assert!(p.value.data().iter().all(|x| x.abs() <= 0.25));
        assert_eq!(p.grad.shape(), p.value.shape());
    }

    #[test]
    fn soft_update_formula() {
        let mut rng = Rng::new(0);
        let mut online = Linear::new("a", 1, 1, &mut rng);
        let mut target = online.clone();
        online.weight.value.set(0, 0, 1.0);
        target.weight.value.set(0, 0, 0.0);
        target.soft_update_from(&online, 0.1).unwrap();
        assert!((target.weight.value.get(0, 0) - 0.1).abs() < 1e-15);
    }
}
