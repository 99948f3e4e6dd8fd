use crate::error::{Error, Result};

/// Numerically stable softmax (max-subtracted).
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Empty("softmax input"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("softmax input"));
    }
    Ok(softmax_unchecked(v))
}

pub(crate) fn softmax_unchecked(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= sum);
    out
}

/// Log-softmax, stable for large magnitudes.
pub fn log_softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    v.iter().map(|x| x - lse).collect()
}

/// Backpropagates `grad_out` through softmax given its output `p`.
pub fn softmax_backward(p: &[f64], grad_out: &[f64]) -> Vec<f64> {
    let inner: f64 = p.iter().zip(grad_out).map(|(a, b)| a * b).sum();
    p.iter().zip(grad_out).map(|(pi, gi)| pi * (gi - inner)).collect()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn tanh(z: f64) -> f64 {
    z.tanh()
}

pub fn tanh_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&z| z.tanh()).collect()
}

pub fn sigmoid_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&z| sigmoid(z)).collect()
}

/// Element-wise activation used inside dense blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0; 4]).unwrap(), vec![0.25; 4]);
        let p = softmax(&[1.0, 0.0]).unwrap();
        assert!((p[0] - 0.73106).abs() < 1e-4 && (p[1] - 0.26894).abs() < 1e-4);
        let p = softmax(&[3.0, 1003.0]).unwrap();
        assert!(p[0] < 1e-300 && (p[1] - 1.0).abs() < 1e-12);
        assert!(matches!(softmax(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn activation_examples() {
        assert_eq!(tanh(0.0), 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(2.0) - 0.8808).abs() < 1e-4);
        for v in [0.3, 1.7, 25.0] {
            assert_eq!(tanh(-v), -tanh(v));
        }
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(v in prop::collection::vec(-1e6f64..1e6, 1..32)) {
            let p = softmax(&v).unwrap();
            let s: f64 = p.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn activation_ranges(z in -30.0f64..30.0) {
            let t = tanh(z);
            let s = sigmoid(z);
            prop_assert!((-1.0..=1.0).contains(&t));
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
