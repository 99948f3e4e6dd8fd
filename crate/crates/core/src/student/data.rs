use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Position of the sample within its dataset.
    pub index: usize,
    pub features: Vec<f64>,
    pub label: usize,
    /// Generating concept, when known (synthetic data).
    pub concept: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    samples: Vec<Sample>,
    num_classes: usize,
    feature_dim: usize,
}

impl LabeledDataset {
    /// Builds a dataset, re-indexing samples by position.
    pub fn new(mut samples: Vec<Sample>, num_classes: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if num_classes == 0 {
            return Err(Error::invalid("dataset needs at least one class"));
        }
        let feature_dim = samples[0].features.len();
        for (i, s) in samples.iter_mut().enumerate() {
            s.index = i;
            if s.label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    label: s.label,
                    num_classes,
                });
            }
            if s.features.len() != feature_dim {
                return Err(Error::Shape {
                    context: "sample features",
                    expected: (feature_dim, 1),
                    actual: (s.features.len(), 1),
                });
            }
            if s.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("sample features"));
            }
        }
        Ok(Self {
            samples,
            num_classes,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, index: usize) -> Result<&Sample> {
        self.samples.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.samples.len(),
        })
    }

    /// Sample positions grouped by label.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for s in &self.samples {
            out[s.label].push(s.index);
        }
        out
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_members().iter().map(Vec::len).collect()
    }

    /// Errors unless every class has at least one sample.
    pub fn require_all_classes(&self) -> Result<()> {
        for (class, count) in self.class_counts().into_iter().enumerate() {
            if count == 0 {
                return Err(Error::TooFewSamples {
                    class,
                    count,
                    required: 1,
                });
            }
        }
        Ok(())
    }

    /// Number of distinct concept tags (0 when untagged).
    pub fn num_concepts(&self) -> usize {
        self.samples.iter().filter_map(|s| s.concept).max().map_or(0, |m| m + 1)
    }

    /// New dataset holding the given samples in the given order, re-indexed.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices
            .iter()
            .map(|&i| self.sample(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, self.num_classes)
    }
}

/// Sample positions selected for one teaching interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiniBatch {
    indices: Vec<usize>,
}

impl MiniBatch {
    pub fn new(indices: Vec<usize>, data: &LabeledDataset) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in &indices {
            if i >= data.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: data.len(),
                });
            }
            if !seen.insert(i) {
                return Err(Error::invalid(format!("duplicate index {i} in mini-batch")));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}
