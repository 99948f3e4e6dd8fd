use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::split::SplitConfig;
use super::synthetic::SyntheticSpec;
use crate::agent::AgentConfig;
use crate::baselines::{SplConfig, TeacherKind};
use crate::error::{Error, Result};
use crate::ktrace::KtConfig;
use crate::student::{StudentConfig, StudentKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: String,
    pub dataset: DatasetSource,
    /// Latent concepts N; defaults to the synthetic spec's concept count.
    pub num_concepts: Option<usize>,
    pub batch_size: usize,
    pub episodes: usize,
    pub steps: usize,
    pub seeds: Vec<u64>,
    pub teacher: TeacherKind,
    pub phase1_student: StudentKind,
    pub phase2_student: StudentKind,
    pub split: SplitConfig,
    pub student: StudentConfig,
    pub kt: KtConfig,
    pub agent: AgentConfig,
    pub spl: SplConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Unknown {
                what: "preset",
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        })
    }
}

/// Two balanced classes over four concepts, 1000 samples each. Class 0 sits
/// mostly on a tight concept; class 1 spreads over two wide ones and owns the
/// rare concept, so it is the harder class to learn.
pub fn desk_dataset() -> SyntheticSpec {
    SyntheticSpec {
        num_classes: 2,
        num_concepts: 4,
        samples_per_class: 1000,
        feature_dim: 8,
        centers: None,
        center_scale: 3.0,
        spreads: vec![0.5, 1.5, 1.5, 1.0],
        class_separation: 3.0,
        affinity: Some(vec![vec![0.6, 0.2, 0.2, 0.0], vec![0.1, 0.4, 0.4, 0.1]]),
        imbalance: None,
        seed: 0,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut cfg = Self {
            task: "synthetic".into(),
            dataset: DatasetSource::Synthetic(desk_dataset()),
            num_concepts: None,
            batch_size: 16,
            episodes: 50,
            steps: 20,
            seeds: vec![0, 1, 2, 3, 4],
            teacher: TeacherKind::Kadt,
            phase1_student: StudentKind::Mlp,
            phase2_student: StudentKind::Mlp,
            split: SplitConfig::default(),
            student: StudentConfig::default(),
            kt: KtConfig::default(),
            agent: AgentConfig::default(),
            spl: SplConfig::default(),
        };
        cfg.apply_preset(preset);
        cfg
    }

    /// Sets the episode budget of a preset, leaving everything else alone.
    pub fn apply_preset(&mut self, preset: Preset) {
        let (m, t) = match preset {
            Preset::Desk => (50, 20),
            Preset::Paper => (350, 50),
        };
        self.episodes = m;
        self.steps = t;
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let DatasetSource::Csv { path: p } = &mut cfg.dataset {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn concepts(&self) -> Result<usize> {
        match (&self.dataset, self.num_concepts) {
            (_, Some(n)) => Ok(n),
            (DatasetSource::Synthetic(s), None) => Ok(s.num_concepts),
            (DatasetSource::Csv { .. }, None) => Err(Error::Config("num_concepts is required for csv datasets".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.task.trim().is_empty() {
            return Err(Error::Config("task must be named".into()));
        }
        if self.batch_size == 0 || self.episodes == 0 || self.steps == 0 {
            return Err(Error::Config("batch_size, episodes and steps must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.concepts()? == 0 {
            return Err(Error::Config("num_concepts must be positive".into()));
        }
        if let DatasetSource::Synthetic(s) = &self.dataset {
            s.validate()?;
        }
        if !(self.student.learning_rate > 0.0) || self.student.hidden_units == 0 {
            return Err(Error::Config(
                "student learning_rate and hidden_units must be positive".into(),
            ));
        }
        if self.kt.key_dim == 0 || self.kt.value_dim == 0 || !(self.kt.learning_rate > 0.0) {
            return Err(Error::Config("kt dimensions and learning rate must be positive".into()));
        }
        self.split.validate()?;
        self.agent.validate()?;
        self.spl.validate()
    }
}
