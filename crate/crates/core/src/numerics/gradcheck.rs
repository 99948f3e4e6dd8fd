use serde::Serialize;

use super::layers::Parameterized;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Parameter holding the worst entry.
    pub worst: String,
    pub entries_checked: usize,
    pub pass: bool,
}

/// Compares analytic gradients against central differences.
///
/// `loss(model, want_grad)` must return the scalar loss; when `want_grad` is
/// true it must also accumulate `dloss/dparam` into the parameter gradients
/// (they are zeroed beforehand). The relative error of each entry is
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn finite_diff_check<M, F>(model: &mut M, mut loss: F, h: f64, tol: f64) -> Result<GradCheckReport>
where
    M: Parameterized + ?Sized,
    F: FnMut(&mut M, bool) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::invalid("finite difference step must be positive"));
    }
    model.zero_grad();
    let base = loss(model, true)?;
    if !base.is_finite() {
        return Err(Error::NonFinite("gradcheck loss"));
    }
    let analytic: Vec<Vec<f64>> = model.params().iter().map(|p| p.grad.data().to_vec()).collect();
    let names: Vec<String> = model.params().iter().map(|p| p.name.clone()).collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: String::new(),
        entries_checked: 0,
        pass: true,
    };
    for (pi, grads) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let original = model.params()[pi].value.data()[k];
            model.params_mut()[pi].value.data_mut()[k] = original + h;
            let plus = loss(model, false)?;
            model.params_mut()[pi].value.data_mut()[k] = original - h;
            let minus = loss(model, false)?;
            model.params_mut()[pi].value.data_mut()[k] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite("gradcheck loss"));
            }
            let numeric = (plus - minus) / (2.0 * h);
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            let rel = (a - numeric).abs() / denom;
            report.entries_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = format!("{}[{k}]", names[pi]);
            }
        }
    }
    model.zero_grad();
    report.pass = report.max_rel_err <= tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Activation, Linear, Matrix, Mlp, Rng};

    #[test]
    fn linear_case_is_exact() {
        let mut rng = Rng::new(5);
        let mut layer = Linear::new("lin", 3, 1, &mut rng);
        let x = Matrix::from_rows(&[vec![0.5, -1.0, 2.0]]).unwrap();
        let report = finite_diff_check(
            &mut layer,
            |l, want| {
                let y = if want { l.forward(&x)? } else { l.infer(&x)? };
                if want {
                    l.backward(&Matrix::filled(1, 1, 1.0))?;
                }
                Ok(y.get(0, 0))
            },
            1e-5,
            1e-7,
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.max_rel_err <= 1e-7);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut rng = Rng::new(9);
        let mut mlp = Mlp::new("m", &[3, 4, 1], Activation::Tanh, Activation::Identity, &mut rng);
        let x = Matrix::from_rows(&[vec![0.3, -0.2, 0.9]]).unwrap();
        let report = finite_diff_check(
            &mut mlp,
            |m, want| {
                let y = if want { m.forward(&x)? } else { m.infer(&x)? };
                if want {
                    m.backward(&Matrix::filled(1, 1, 1.0))?;
                    for p in m.params_mut() {
                        for g in p.grad.data_mut() {
                            *g *= 1.1;
                        }
                    }
                }
                Ok(y.get(0, 0))
            },
            1e-5,
            1e-3,
        )
        .unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn nonfinite_loss_is_an_error() {
        let mut rng = Rng::new(1);
        let mut layer = Linear::new("lin", 1, 1, &mut rng);
        let r = finite_diff_check(&mut layer, |_, _| Ok(f64::NAN), 1e-5, 1e-3);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
