use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::student::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub test_fraction: f64,
    /// Share of the train-validate part held out for validation when
    /// `folds` is 1.
    pub valid_fraction: f64,
    /// Share of the validation split used for the reward signal.
    pub reward_fraction: f64,
    /// Above 1, validation is fold `fold` of a stratified k-fold partition
    /// of the train-validate part.
    pub folds: usize,
    pub fold: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.3,
            valid_fraction: 0.2,
            reward_fraction: 0.05,
            folds: 1,
            fold: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.test_fraction)
            || !open(self.valid_fraction)
            || !(self.reward_fraction > 0.0 && self.reward_fraction <= 1.0)
        {
            return Err(Error::Config("split fractions must lie in (0, 1)".into()));
        }
        if self.folds == 0 || self.fold >= self.folds {
            return Err(Error::Config("split.fold must be below split.folds".into()));
        }
        Ok(())
    }
}

/// Positions into the source dataset, except `reward_slice`, which indexes
/// into `valid`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
    pub reward_slice: Vec<usize>,
}

pub const MIN_DATASET: usize = 20;
pub const MIN_PER_CLASS: usize = 4;

/// `round(n * frac)` clamped to `1..n`.
fn take(n: usize, frac: f64) -> usize {
    ((n as f64 * frac).round() as usize).clamp(1, n - 1)
}

/// Class-stratified test / train / validation split plus a fixed reward
/// slice of the validation split. Every class lands in every split.
pub fn split(data: &LabeledDataset, config: &SplitConfig, rng: &mut Rng) -> Result<Splits> {
    config.validate()?;
    if data.len() < MIN_DATASET {
        return Err(Error::invalid(format!(
            "dataset of {} samples is below the minimum of {MIN_DATASET}",
            data.len()
        )));
    }
    let mut out = Splits {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        reward_slice: Vec::new(),
    };
    let mut valid_by_class = Vec::new();
    for (class, mut members) in data.class_members().into_iter().enumerate() {
        let need = MIN_PER_CLASS.max(config.folds + 2);
        if members.len() < need {
            return Err(Error::TooFewSamples {
                class,
                count: members.len(),
                required: need,
            });
        }
        rng.shuffle(&mut members);
        let n_test = take(members.len(), config.test_fraction);
        let rest = members.split_off(n_test);
        out.test.extend(members);
        let (train, valid) = if config.folds == 1 {
            let n_valid = take(rest.len(), config.valid_fraction);
            (rest[n_valid..].to_vec(), rest[..n_valid].to_vec())
        } else {
            let k = config.folds;
            let mut train = Vec::new();
            let mut valid = Vec::new();
            for (j, &i) in rest.iter().enumerate() {
                if j % k == config.fold {
                    valid.push(i);
                } else {
                    train.push(i);
                }
            }
            (train, valid)
        };
        out.train.extend(train);
        valid_by_class.push(valid);
    }
    for valid in valid_by_class {
        let base = out.valid.len();
        let n_reward = ((valid.len() as f64 * config.reward_fraction).round() as usize).clamp(1, valid.len());
        out.reward_slice.extend(base..base + n_reward);
        out.valid.extend(valid);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::student::Sample;

    fn data(per_class: &[usize]) -> LabeledDataset {
        let mut samples = Vec::new();
        for (c, &n) in per_class.iter().enumerate() {
            for j in 0..n {
                samples.push(Sample {
                    index: 0,
                    features: vec![j as f64],
                    label: c,
                    concept: None,
                });
            }
        }
        LabeledDataset::new(samples, per_class.len()).unwrap()
    }

    #[test]
    fn proportions_and_coverage() {
        let d = data(&[500, 500]);
        let s = split(&d, &SplitConfig::default(), &mut Rng::new(0)).unwrap();
        assert_eq!(s.test.len(), 300);
        assert_eq!(s.valid.len(), 140);
        assert_eq!(s.train.len(), 560);
        assert_eq!(s.reward_slice.len(), 8);
        let mut all: Vec<usize> = s.train.iter().chain(&s.valid).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        for part in [&s.train, &s.valid, &s.test] {
            for c in 0..2 {
                assert!(part.iter().any(|&i| d.samples()[i].label == c));
            }
        }
        for c in 0..2 {
            assert!(s.reward_slice.iter().any(|&j| d.samples()[s.valid[j]].label == c));
        }
    }

    #[test]
    fn seeded_and_guarded() {
        let d = data(&[30, 12]);
        let a = split(&d, &SplitConfig::default(), &mut Rng::new(5)).unwrap();
        let b = split(&d, &SplitConfig::default(), &mut Rng::new(5)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            split(&data(&[30, 3]), &SplitConfig::default(), &mut Rng::new(0)),
            Err(Error::TooFewSamples { class: 1, .. })
        ));
        assert!(split(&data(&[8, 8]), &SplitConfig::default(), &mut Rng::new(0)).is_err());
    }

    #[test]
    fn k_fold_validation() {
        let d = data(&[50, 50]);
        let cfg = SplitConfig {
            folds: 5,
            fold: 2,
            ..SplitConfig::default()
        };
        let s = split(&d, &cfg, &mut Rng::new(1)).unwrap();
        assert_eq!(s.valid.len(), 14);
        assert_eq!(s.train.len(), 56);
    }
}
