//! End-to-end scoring: detection matching at IoU 0.5, then normalized edit
//! distance over the matched pairs.
//!
//! Every matched pair contributes its distance; every unmatched counted
//! ground truth and every unmatched counted detection contributes 1.
//! Ignored items contribute nothing. The reported score is one minus the
//! mean contribution, so higher is better.

use serde::Serialize;

use crate::annotation_io::{Detection, DetectionSubmission, GroundTruth, GroundTruthVariant};
use crate::error::EvalError;
use crate::evaluator_detection::{IouMatrix, MatchResult, SELECTION_IOU};
use crate::geometry::Quad;
use crate::parallel::map_ordered;
use crate::text_metrics::norm_edit_distance;
use crate::EvalOptions;

/// IoU a detection must exceed to be paired.
pub const E2E_IOU: f64 = SELECTION_IOU;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPair {
    pub det: usize,
    pub gt: usize,
    pub iou: f64,
    pub distance: f64,
}

/// Distance terms of one image against one variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantTerms {
    pub pairs: Vec<ScoredPair>,
    pub unmatched_gts: usize,
    pub unmatched_detections: usize,
    pub ignored_detections: usize,
    pub ignored_gts: usize,
    pub term_sum: f64,
    pub n_terms: u64,
}

impl VariantTerms {
    /// Mean term distance; 0 when the image has no terms.
    pub fn mean_distance(&self) -> f64 {
        if self.n_terms == 0 {
            0.0
        } else {
            self.term_sum / self.n_terms as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageE2E {
    pub image_id: String,
    pub variant: usize,
    pub n_variants: usize,
    #[serde(flatten)]
    pub terms: VariantTerms,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct E2EReport {
    pub score: f64,
    pub term_sum: f64,
    pub n_terms: u64,
    pub per_image: Vec<ImageE2E>,
}

/// Matches one image against one variant and collects its distance terms.
pub fn variant_terms(
    image_id: &str,
    dets: &[Detection],
    variant: &GroundTruthVariant,
) -> Result<VariantTerms, EvalError> {
    let quads: Vec<Quad> = dets.iter().map(|d| d.quad).collect();
    let gts = &variant.instances;
    let matrix = IouMatrix::compute(&quads, gts).map_err(|source| EvalError::Geometry {
        image_id: image_id.to_owned(),
        source,
    })?;
    let m: MatchResult = matrix.assign(quads.len(), gts, E2E_IOU);
    let mut pairs = Vec::with_capacity(m.pairs.len());
    for p in &m.pairs {
        let text = dets[p.det]
            .transcript
            .as_deref()
            .ok_or_else(|| EvalError::MissingTranscript {
                image_id: image_id.to_owned(),
                index: p.det,
            })?;
        pairs.push(ScoredPair {
            det: p.det,
            gt: p.gt,
            iou: p.iou,
            distance: norm_edit_distance(text, &gts[p.gt].transcription),
        });
    }
    let misses = m.unmatched_gts.len() + m.unmatched_detections.len();
    let term_sum = pairs.iter().map(|p| p.distance).sum::<f64>() + misses as f64;
    Ok(VariantTerms {
        n_terms: (pairs.len() + misses) as u64,
        pairs,
        unmatched_gts: m.unmatched_gts.len(),
        unmatched_detections: m.unmatched_detections.len(),
        ignored_detections: m.ignored_detections.len(),
        ignored_gts: m.ignored_gts.len(),
        term_sum,
    })
}

/// Picks the variant with the lowest mean term distance; ties go to more
/// matched pairs, then to the lower index.
///
/// # Panics
///
/// If `variants` is empty.
pub fn select_variant_e2e(
    image_id: &str,
    dets: &[Detection],
    variants: &[GroundTruthVariant],
) -> Result<(usize, VariantTerms), EvalError> {
    let mut best: Option<(usize, VariantTerms)> = None;
    for (vi, v) in variants.iter().enumerate() {
        let t = variant_terms(image_id, dets, v)?;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                let (m, bm) = (t.mean_distance(), b.mean_distance());
                m < bm || (m == bm && t.pairs.len() > b.pairs.len())
            }
        };
        if better {
            best = Some((vi, t));
        }
    }
    Ok(best.expect("at least one ground-truth variant"))
}

/// Scores an end-to-end submission. Every detection must carry a
/// transcript.
pub fn eval_task4(
    gt: &GroundTruth,
    pred: &DetectionSubmission,
    opts: &EvalOptions,
) -> Result<E2EReport, EvalError> {
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let images: Vec<(&str, &[GroundTruthVariant])> = gt.iter().collect();
    let per_image = map_ordered(&images, opts.jobs, |&(id, variants)| {
        let dets = pred.get(id);
        if let Some(index) = dets.iter().position(|d| d.transcript.is_none()) {
            return Err(EvalError::MissingTranscript {
                image_id: id.to_owned(),
                index,
            });
        }
        let (variant, terms) = select_variant_e2e(id, dets, variants)?;
        Ok(ImageE2E {
            image_id: id.to_owned(),
            variant,
            n_variants: variants.len(),
            terms,
        })
    })?;
    let term_sum: f64 = per_image.iter().map(|i| i.terms.term_sum).sum();
    let n_terms: u64 = per_image.iter().map(|i| i.terms.n_terms).sum();
    let score = if n_terms == 0 {
        1.0
    } else {
        (1.0 - term_sum / n_terms as f64).clamp(0.0, 1.0)
    };
    Ok(E2EReport {
        score,
        term_sum,
        n_terms,
        per_image,
    })
}
