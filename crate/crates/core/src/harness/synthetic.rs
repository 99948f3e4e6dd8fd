use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::student::{LabeledDataset, Sample};

/// Gaussian clusters, one per (class, concept) pair.
///
/// Every concept has a center; classes are offset from it along a
/// concept-specific direction, so the decision boundary differs between
/// concepts. `affinity[y]` is the concept mix of class `y` (rows are
/// normalized on use) and `imbalance[y]` scales its sample count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub num_concepts: usize,
    pub samples_per_class: usize,
    pub feature_dim: usize,
    /// Concept centers; drawn at random with `center_scale` when absent.
    pub centers: Option<Vec<Vec<f64>>>,
    pub center_scale: f64,
    /// Per-concept standard deviation.
    pub spreads: Vec<f64>,
    pub class_separation: f64,
    pub affinity: Option<Vec<Vec<f64>>>,
    pub imbalance: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_classes: 2,
            num_concepts: 4,
            samples_per_class: 100,
            feature_dim: 4,
            centers: None,
            center_scale: 3.0,
            spreads: vec![1.0; 4],
            class_separation: 2.0,
            affinity: None,
            imbalance: None,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_classes < 2 || self.num_concepts == 0 || self.samples_per_class == 0 {
            return bad("synthetic spec needs at least two classes, one concept and one sample per class".into());
        }
        if self.feature_dim < 2 {
            return bad("synthetic feature_dim must be at least 2".into());
        }
        if self.spreads.len() != self.num_concepts {
            return bad(format!(
                "expected {} spreads, got {}",
                self.num_concepts,
                self.spreads.len()
            ));
        }
        if self.spreads.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return bad("degenerate spread: spreads must be finite and non-negative".into());
        }
        if let Some(c) = &self.centers {
            if c.len() != self.num_concepts || c.iter().any(|r| r.len() != self.feature_dim) {
                return bad("centers must be num_concepts rows of feature_dim values".into());
            }
        }
        if let Some(a) = &self.affinity {
            if a.len() != self.num_classes || a.iter().any(|r| r.len() != self.num_concepts) {
                return bad("affinity must be num_classes rows of num_concepts values".into());
            }
            if a.iter()
                .any(|r| r.iter().any(|x| !(*x >= 0.0)) || r.iter().sum::<f64>() <= 0.0)
            {
                return bad("affinity rows must be non-negative with a positive sum".into());
            }
        }
        if let Some(m) = &self.imbalance {
            if m.len() != self.num_classes || m.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
                return bad("imbalance must give one factor in (0, 1] per class".into());
            }
        }
        Ok(())
    }

    /// Normalized class-concept mix.
    pub fn affinity_matrix(&self) -> Vec<Vec<f64>> {
        match &self.affinity {
            Some(a) => a
                .iter()
                .map(|r| {
                    let t: f64 = r.iter().sum();
                    r.iter().map(|x| x / t).collect()
                })
                .collect(),
            None => vec![vec![1.0 / self.num_concepts as f64; self.num_concepts]; self.num_classes],
        }
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        (0..self.num_classes)
            .map(|y| {
                let f = self.imbalance.as_ref().map_or(1.0, |m| m[y]);
                ((self.samples_per_class as f64 * f).round() as usize).max(1)
            })
            .collect()
    }
}

/// Largest-remainder split of `n` items by `shares` (summing to one).
fn split_counts(n: usize, shares: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = shares.iter().map(|s| s * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn unit_vector(dim: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Samples are ordered class by class, concept by concept, and tagged with
/// their generating concept.
pub fn generate_synthetic(spec: &SyntheticSpec, rng: &mut Rng) -> Result<LabeledDataset> {
    spec.validate()?;
    let d = spec.feature_dim;
    let centers: Vec<Vec<f64>> = match &spec.centers {
        Some(c) => c.clone(),
        None => (0..spec.num_concepts)
            .map(|_| unit_vector(d, rng).into_iter().map(|x| x * spec.center_scale).collect())
            .collect(),
    };
    let directions: Vec<Vec<f64>> = (0..spec.num_concepts).map(|_| unit_vector(d, rng)).collect();
    let affinity = spec.affinity_matrix();
    let mid = (spec.num_classes - 1) as f64 / 2.0;
    let mut samples = Vec::new();
    for (y, &n) in spec.class_sizes().iter().enumerate() {
        let offset = spec.class_separation * (y as f64 - mid);
        for (c, count) in split_counts(n, &affinity[y]).into_iter().enumerate() {
            let spread = spec.spreads[c];
            for _ in 0..count {
                let features = (0..d)
                    .map(|j| centers[c][j] + offset * directions[c][j] + spread * rng.normal())
                    .collect();
                samples.push(Sample {
                    index: 0,
                    features,
                    label: y,
                    concept: Some(c),
                });
            }
        }
    }
    LabeledDataset::new(samples, spec.num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::student::{build_student, evaluate, MiniBatch, StudentConfig, StudentKind};

    #[test]
    fn sizes_and_labels() {
        let spec = SyntheticSpec {
            samples_per_class: 100,
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(&spec, &mut Rng::new(0)).unwrap();
        assert_eq!(d.len(), 200);
        assert_eq!(d.class_counts(), vec![100, 100]);
        assert_eq!(d.num_concepts(), 4);
    }

    #[test]
    fn zero_spread_collapses_clusters() {
        let spec = SyntheticSpec {
            spreads: vec![0.0; 4],
            samples_per_class: 20,
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(&spec, &mut Rng::new(1)).unwrap();
        for a in d.samples() {
            for b in d.samples() {
                if a.label == b.label && a.concept == b.concept {
                    assert_eq!(a.features, b.features);
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let neg = SyntheticSpec {
            spreads: vec![1.0, -0.1, 1.0, 1.0],
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&neg, &mut Rng::new(0)).is_err());
        let flat = SyntheticSpec {
            feature_dim: 1,
            ..SyntheticSpec::default()
        };
        assert!(flat.validate().is_err());
        let aff = SyntheticSpec {
            affinity: Some(vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 4]]),
            ..SyntheticSpec::default()
        };
        assert!(aff.validate().is_err());
    }

    #[test]
    fn affinity_and_imbalance_shape_counts() {
        let spec = SyntheticSpec {
            samples_per_class: 100,
            affinity: Some(vec![vec![3.0, 1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0, 1.0]]),
            imbalance: Some(vec![1.0, 0.5]),
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(&spec, &mut Rng::new(2)).unwrap();
        assert_eq!(d.class_counts(), vec![100, 50]);
        let c0: Vec<usize> = (0..4)
            .map(|c| {
                d.samples()
                    .iter()
                    .filter(|s| s.label == 0 && s.concept == Some(c))
                    .count()
            })
            .collect();
        assert_eq!(c0, vec![75, 25, 0, 0]);
    }

    #[test]
    fn well_separated_spec_is_linearly_learnable() {
        let spec = SyntheticSpec {
            samples_per_class: 200,
            num_concepts: 1,
            spreads: vec![0.3],
            class_separation: 4.0,
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(&spec, &mut Rng::new(3)).unwrap();
        let mut rng = Rng::new(4);
        let mut s = build_student(StudentKind::Logistic, 4, 2, &StudentConfig::default(), &mut rng);
        for _ in 0..300 {
            let b = MiniBatch::new(rng.sample_indices(d.len(), 32), &d).unwrap();
            s.train_on_batch(&d, &b).unwrap();
        }
        let all: Vec<usize> = (0..d.len()).collect();
        assert!(evaluate(s.as_ref(), &d, &all).unwrap().accuracy > 0.95);
    }
}
