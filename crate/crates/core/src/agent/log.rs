use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub phase: u8,
    pub episode: usize,
    pub step: usize,
    pub reward: f64,
    pub train_loss: f64,
    /// Accuracy on the reward slice after the step.
    pub performance: f64,
    pub kt_rmse: Option<f64>,
    pub critic_loss: Option<f64>,
    pub action: Vec<f64>,
    pub class_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub phase: u8,
    pub episode: usize,
    pub cumulative_reward: f64,
    pub valid_accuracy: f64,
    pub valid_auc: Option<f64>,
    pub test_accuracy: f64,
    pub test_auc: Option<f64>,
    pub test_loss: f64,
    /// Validation accuracy per concept tag; `None` where a concept has no sample.
    pub concept_accuracy: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub steps: Vec<StepRecord>,
    pub episodes: Vec<EpisodeRecord>,
}

impl MetricsLog {
    pub fn extend(&mut self, other: MetricsLog) {
        self.steps.extend(other.steps);
        self.episodes.extend(other.episodes);
    }

    pub fn phase_episodes(&self, phase: u8) -> impl Iterator<Item = &EpisodeRecord> {
        self.episodes.iter().filter(move |e| e.phase == phase)
    }

    /// Mean end-of-episode test accuracy over a phase.
    pub fn mean_test_accuracy(&self, phase: u8) -> Option<f64> {
        let v: Vec<f64> = self.phase_episodes(phase).map(|e| e.test_accuracy).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn final_test_accuracy(&self, phase: u8) -> Option<f64> {
        self.phase_episodes(phase).last().map(|e| e.test_accuracy)
    }
}
