//! Student models trained by mini-batch gradient descent and the metrics
//! used to score them.

mod data;
mod metrics;
mod models;

pub use data::{LabeledDataset, MiniBatch, Sample};
pub use metrics::{evaluate, multiclass_auc, per_concept_accuracy, roc_auc, EvalReport};
pub use models::{build_student, NeuralStudent, Student, StudentConfig, StudentKind};
