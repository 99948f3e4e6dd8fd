use serde::{Deserialize, Serialize};

use super::data::LabeledDataset;
use super::models::Student;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Absent when the slice holds a single class.
    pub auc: Option<f64>,
    pub mean_loss: f64,
}

/// ROC AUC via the Mann-Whitney statistic with mid-ranks for ties.
///
/// Returns `None` unless both positives and negatives are present.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n = scores.len();
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j share the average
        let mid = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            if positive[k] {
                rank_sum_pos += mid;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Binary: AUC of the class-1 score. Multi-class: one-vs-rest macro average
/// over classes that have both positives and negatives in the slice.
pub fn multiclass_auc(probabilities: &[Vec<f64>], labels: &[usize], num_classes: usize) -> Option<f64> {
    if num_classes == 2 {
        let scores: Vec<f64> = probabilities.iter().map(|p| p[1]).collect();
        let pos: Vec<bool> = labels.iter().map(|&y| y == 1).collect();
        return roc_auc(&scores, &pos);
    }
    let mut total = 0.0;
    let mut count = 0;
    for c in 0..num_classes {
        let scores: Vec<f64> = probabilities.iter().map(|p| p[c]).collect();
        let pos: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        if let Some(a) = roc_auc(&scores, &pos) {
            total += a;
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}

pub fn evaluate(student: &dyn Student, data: &LabeledDataset, indices: &[usize]) -> Result<EvalReport> {
    if indices.is_empty() {
        return Err(Error::Empty("evaluation slice"));
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    let mut probs = Vec::with_capacity(indices.len());
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        let s = data.sample(i)?;
        let logits = student.logits(&s.features);
        if super::models::argmax(&logits) == s.label {
            correct += 1;
        }
        loss += student.sample_loss(s);
        probs.push(crate::numerics::softmax_unchecked(&logits));
        labels.push(s.label);
    }
    let n = indices.len() as f64;
    Ok(EvalReport {
        accuracy: correct as f64 / n,
        auc: multiclass_auc(&probs, &labels, data.num_classes()),
        mean_loss: loss / n,
    })
}

/// Accuracy per concept tag; `None` for concepts absent from the slice.
pub fn per_concept_accuracy(
    student: &dyn Student,
    data: &LabeledDataset,
    indices: &[usize],
    num_concepts: usize,
) -> Result<Vec<Option<f64>>> {
    let mut hits = vec![0usize; num_concepts];
    let mut totals = vec![0usize; num_concepts];
    for &i in indices {
        let s = data.sample(i)?;
        if let Some(c) = s.concept.filter(|&c| c < num_concepts) {
            totals[c] += 1;
            if student.predict(&s.features) == s.label {
                hits[c] += 1;
            }
        }
    }
    Ok(hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
        .collect())
}
