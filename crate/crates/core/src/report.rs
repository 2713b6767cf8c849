//! JSON report documents and one-line summaries.
//!
//! Every report carries the toolkit version and the conventions it was
//! computed under, plus a top-level `score` holding the task's ranking
//! metric so leaderboards can consume any report uniformly.

use serde_json::{json, Map, Value};

use crate::annotation_io::Diagnostic;
use crate::evaluator_detection::{DetectionReport, SELECTION_IOU};
use crate::evaluator_e2e::{E2EReport, E2E_IOU};
use crate::evaluator_recognition::{RecognitionReport, RecognitionTask};
use crate::leaderboard::format_score;

pub const TOOLKIT: &str = "rre";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn toolkit() -> Value {
    json!({ "name": TOOLKIT, "version": VERSION })
}

/// Key suffix for a threshold: 0.5 -> "0.5".
pub fn threshold_key(t: f64) -> String {
    format!("{t}")
}

pub fn recognition_json(r: &RecognitionReport, warnings: &[Diagnostic]) -> Value {
    let (task, conventions) = match r.task {
        RecognitionTask::Task1 => (
            "task1",
            json!({
                "equality": "exact code-point equality, no width or case folding",
                "missing_prediction": "wrong",
            }),
        ),
        RecognitionTask::Task2 => (
            "task2",
            json!({
                "normalization": "full-width ASCII and U+3000 folded to half-width; ASCII case-insensitive",
                "distance": "Levenshtein over Unicode scalar values / max length; 0 for two empty strings",
                "missing_prediction": "empty string",
                "score": "1 - mean distance over ground-truth lines",
            }),
        ),
    };
    let numerator_key = match r.task {
        RecognitionTask::Task1 => "n_right",
        RecognitionTask::Task2 => "distance_sum",
    };
    let mut doc = Map::new();
    doc.insert("toolkit".into(), toolkit());
    doc.insert("task".into(), json!(task));
    doc.insert("score".into(), json!(r.score));
    doc.insert("score_display".into(), json!(format_score(r.score)));
    doc.insert("n_total".into(), json!(r.n_total));
    doc.insert(numerator_key.into(), json!(r.numerator));
    doc.insert("conventions".into(), conventions);
    doc.insert("warnings".into(), json!(warnings));
    doc.insert("per_image".into(), json!(r.per_image));
    Value::Object(doc)
}

pub fn detection_json(r: &DetectionReport, warnings: &[Diagnostic]) -> Value {
    let mut doc = Map::new();
    doc.insert("toolkit".into(), toolkit());
    doc.insert("task".into(), json!("task3"));
    let f = r.ranking_f();
    doc.insert("score".into(), json!(f));
    doc.insert("score_display".into(), json!(format_score(f)));
    for t in &r.thresholds {
        let k = threshold_key(t.iou);
        doc.insert(format!("f_{k}"), json!(t.f_score));
        doc.insert(format!("p_{k}"), json!(t.precision));
        doc.insert(format!("r_{k}"), json!(t.recall));
    }
    doc.insert("thresholds".into(), json!(r.thresholds));
    doc.insert(
        "conventions".into(),
        json!({
            "matching": "one-to-one: each detection takes its max-IoU ground truth above the threshold; \
                         a ground truth claimed twice keeps the higher IoU, ties to the lower detection index",
            "ignored": "detections kept by an ignored ground truth and all ignored ground truths are excluded",
            "zero_division": "precision=1 with no counted detections, recall=1 with no counted ground truth, F=0 when P+R=0",
            "variant_selection": "per image, max F at IoU 0.5 (ties: more true positives, then lower index); reused at every threshold",
            "selection_iou": SELECTION_IOU,
            "averaging": "micro-averaged over the corpus",
            "ranking_metric": format!("f_{}", threshold_key(SELECTION_IOU)),
        }),
    );
    doc.insert("warnings".into(), json!(warnings));
    let per_image: Vec<Value> = r
        .per_image
        .iter()
        .map(|img| {
            let counts: Map<String, Value> = r
                .thresholds
                .iter()
                .zip(&img.counts)
                .map(|(t, c)| (threshold_key(t.iou), json!(c)))
                .collect();
            json!({
                "image_id": img.image_id,
                "variant": img.variant,
                "n_variants": img.n_variants,
                "counts": counts,
            })
        })
        .collect();
    doc.insert("per_image".into(), Value::Array(per_image));
    Value::Object(doc)
}

pub fn e2e_json(r: &E2EReport, warnings: &[Diagnostic]) -> Value {
    let mut doc = Map::new();
    doc.insert("toolkit".into(), toolkit());
    doc.insert("task".into(), json!("task4"));
    doc.insert("score".into(), json!(r.score));
    doc.insert("score_display".into(), json!(format_score(r.score)));
    doc.insert("n_terms".into(), json!(r.n_terms));
    doc.insert("term_sum".into(), json!(r.term_sum));
    doc.insert(
        "conventions".into(),
        json!({
            "iou": E2E_IOU,
            "matching": "same one-to-one engine and ignore rules as task3",
            "terms": "normalized edit distance per matched pair; 1.0 per unmatched counted ground truth; 1.0 per unmatched counted detection",
            "normalization": "full-width ASCII and U+3000 folded to half-width; ASCII case-insensitive",
            "variant_selection": "per image, min mean term distance (ties: more pairs, then lower index)",
            "score": "1 - total term distance / total term count; 1 when there are no terms",
        }),
    );
    doc.insert("warnings".into(), json!(warnings));
    doc.insert("per_image".into(), json!(r.per_image));
    Value::Object(doc)
}

pub fn recognition_summary(r: &RecognitionReport) -> String {
    match r.task {
        RecognitionTask::Task1 => format!(
            "task1 accuracy={} ({}/{})",
            format_score(r.score),
            r.numerator as u64,
            r.n_total
        ),
        RecognitionTask::Task2 => format!(
            "task2 1-NED={} over {} lines",
            format_score(r.score),
            r.n_total
        ),
    }
}

pub fn detection_summary(r: &DetectionReport) -> String {
    let mut parts = Vec::new();
    for t in &r.thresholds {
        let k = threshold_key(t.iou);
        parts.push(format!(
            "F@{k}={} P@{k}={} R@{k}={}",
            format_score(t.f_score),
            format_score(t.precision),
            format_score(t.recall)
        ));
    }
    format!("task3 {}", parts.join(" "))
}

pub fn e2e_summary(r: &E2EReport) -> String {
    format!(
        "task4 1-NED={} over {} terms",
        format_score(r.score),
        r.n_terms
    )
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}
