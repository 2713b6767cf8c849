//! Character accuracy and text-line normalized-edit-distance scoring.

use serde::Serialize;

use crate::annotation_io::LabelSet;
use crate::error::EvalError;
use crate::text_metrics::norm_edit_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecognitionTask {
    Task1,
    Task2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageValue {
    pub image_id: String,
    /// 1/0 correctness for character recognition, normalized edit distance
    /// for line recognition.
    pub value: f64,
    pub predicted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecognitionReport {
    pub task: RecognitionTask,
    pub score: f64,
    pub n_total: usize,
    /// Correct predictions (task 1) or summed distances (task 2).
    pub numerator: f64,
    pub per_image: Vec<ImageValue>,
}

/// Character recognition accuracy: exact code-point equality, no folding.
/// Missing predictions are wrong.
pub fn eval_task1(gt: &LabelSet, pred: &LabelSet) -> Result<RecognitionReport, EvalError> {
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let mut right = 0usize;
    let per_image: Vec<ImageValue> = gt
        .iter()
        .map(|(id, label)| {
            let p = pred.get(id);
            let ok = p == Some(label);
            right += usize::from(ok);
            ImageValue {
                image_id: id.to_owned(),
                value: if ok { 1.0 } else { 0.0 },
                predicted: p.is_some(),
            }
        })
        .collect();
    let n = gt.len();
    Ok(RecognitionReport {
        task: RecognitionTask::Task1,
        score: right as f64 / n as f64,
        n_total: n,
        numerator: right as f64,
        per_image,
    })
}

/// Text-line recognition: one minus the mean normalized edit distance over
/// all ground-truth lines, a missing prediction standing in as "".
pub fn eval_task2(gt: &LabelSet, pred: &LabelSet) -> Result<RecognitionReport, EvalError> {
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let per_image: Vec<ImageValue> = gt
        .iter()
        .map(|(id, label)| {
            let p = pred.get(id);
            ImageValue {
                image_id: id.to_owned(),
                value: norm_edit_distance(p.unwrap_or(""), label),
                predicted: p.is_some(),
            }
        })
        .collect();
    // Summed in image-id order, so the result does not depend on file order.
    let total: f64 = per_image.iter().map(|v| v.value).sum();
    let n = gt.len();
    Ok(RecognitionReport {
        task: RecognitionTask::Task2,
        score: (1.0 - total / n as f64).clamp(0.0, 1.0),
        n_total: n,
        numerator: total,
        per_image,
    })
}
