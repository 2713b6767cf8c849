//! Text-line detection scoring.
//!
//! Detections are matched one-to-one to ground truth by maximum IoU, ignored
//! ground truth is neutral, and each image is scored against whichever of
//! its annotation variants fits the submission best. Corpus precision,
//! recall and F are micro-averaged over all images.

use serde::Serialize;

use crate::annotation_io::{Detection, DetectionSubmission, GroundTruth, GroundTruthVariant, TextInstance};
use crate::error::{EvalError, GeometryError};
use crate::geometry::{iou, Quad};
use crate::parallel::map_ordered;
use crate::EvalOptions;

/// IoU threshold used to pick the ground-truth variant, and the threshold
/// whose F-score ranks submissions.
pub const SELECTION_IOU: f64 = 0.5;

pub const DEFAULT_THRESHOLDS: [f64; 2] = [0.5, 0.7];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchPair {
    pub det: usize,
    pub gt: usize,
    pub iou: f64,
}

/// Outcome of matching one image's detections against one variant.
///
/// Every detection index lands in exactly one of `pairs`,
/// `unmatched_detections` or `ignored_detections`; every ground-truth index
/// in exactly one of `pairs`, `unmatched_gts` or `ignored_gts`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
    pub ignored_detections: Vec<usize>,
    pub ignored_gts: Vec<usize>,
}

impl MatchResult {
    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.pairs.len() as u64,
            n_det: (self.pairs.len() + self.unmatched_detections.len()) as u64,
            n_gt: (self.pairs.len() + self.unmatched_gts.len()) as u64,
        }
    }
}

/// True positives and the counted (non-ignored) detections and ground
/// truths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: u64,
    #[serde(rename = "n_det_counted")]
    pub n_det: u64,
    #[serde(rename = "n_gt_counted")]
    pub n_gt: u64,
}

impl Counts {
    /// 1 when nothing was detected.
    pub fn precision(&self) -> f64 {
        if self.n_det == 0 {
            1.0
        } else {
            self.tp as f64 / self.n_det as f64
        }
    }

    /// 1 when there was nothing to find.
    pub fn recall(&self) -> f64 {
        if self.n_gt == 0 {
            1.0
        } else {
            self.tp as f64 / self.n_gt as f64
        }
    }

    /// Harmonic mean of precision and recall, 0 when both are 0.
    ///
    /// Under the conventions above this equals `2 tp / (n_det + n_gt)`, with
    /// 1 for an empty image; that form is used because it is exact for the
    /// rational values involved.
    pub fn f_score(&self) -> f64 {
        let (num, den) = self.f_ratio();
        num as f64 / den as f64
    }

    fn f_ratio(&self) -> (u64, u64) {
        let den = self.n_det + self.n_gt;
        if den == 0 {
            (1, 1)
        } else {
            (2 * self.tp, den)
        }
    }

    /// Exact comparison of F-scores.
    pub fn cmp_f(&self, other: &Counts) -> std::cmp::Ordering {
        let (a, b) = self.f_ratio();
        let (c, d) = other.f_ratio();
        (u128::from(a) * u128::from(d)).cmp(&(u128::from(c) * u128::from(b)))
    }

    fn add(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.n_det += other.n_det;
        self.n_gt += other.n_gt;
    }
}

/// Pairwise IoU between one image's detections (rows) and one variant's
/// ground truth (columns). Unusable detections (zero area or
/// self-intersecting) have an all-zero row.
pub struct IouMatrix {
    n_gt: usize,
    values: Vec<f64>,
}

struct Bounds {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Bounds {
    fn of(q: &Quad) -> Self {
        let mut b = Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for p in q.vertices() {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }

    fn overlaps(&self, o: &Bounds) -> bool {
        self.min_x < o.max_x && o.min_x < self.max_x && self.min_y < o.max_y && o.min_y < self.max_y
    }
}

impl IouMatrix {
    pub fn compute(dets: &[Quad], gts: &[TextInstance]) -> Result<Self, GeometryError> {
        let n_gt = gts.len();
        let gt_bounds: Vec<Bounds> = gts.iter().map(|g| Bounds::of(&g.quad)).collect();
        for g in gts {
            if !g.quad.is_simple() {
                return Err(GeometryError::SelfIntersecting(g.quad));
            }
        }
        let mut values = vec![0.0; dets.len() * n_gt];
        for (i, d) in dets.iter().enumerate() {
            if !d.is_simple() || d.area() == 0.0 {
                continue;
            }
            let db = Bounds::of(d);
            for (j, g) in gts.iter().enumerate() {
                if db.overlaps(&gt_bounds[j]) {
                    values[i * n_gt + j] = iou(d, &g.quad)?;
                }
            }
        }
        Ok(Self { n_gt, values })
    }

    pub fn get(&self, det: usize, gt: usize) -> f64 {
        self.values[det * self.n_gt + gt]
    }

    fn n_det(&self) -> usize {
        self.values.len().checked_div(self.n_gt).unwrap_or(0)
    }

    /// Runs the three-step matching at threshold `tau`. `n_det` is passed
    /// separately because a matrix with no columns cannot recover it.
    pub fn assign(&self, n_det: usize, gts: &[TextInstance], tau: f64) -> MatchResult {
        debug_assert!(self.n_gt == 0 || self.n_det() == n_det);
        // Step 1: best ground truth per detection, strictly above tau.
        let mut candidate: Vec<Option<usize>> = vec![None; n_det];
        for (i, slot) in candidate.iter_mut().enumerate() {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n_gt {
                let v = self.get(i, j);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            *slot = best.filter(|&(_, v)| v > tau).map(|(j, _)| j);
        }
        // Step 2: each ground truth keeps its highest-IoU claimant; ties go
        // to the lower detection index.
        let mut winner: Vec<Option<usize>> = vec![None; self.n_gt];
        for (i, c) in candidate.iter().enumerate() {
            if let Some(j) = *c {
                match winner[j] {
                    Some(k) if self.get(k, j) >= self.get(i, j) => {}
                    _ => winner[j] = Some(i),
                }
            }
        }
        // Step 3: sort into pairs, ignored and unmatched.
        let mut out = MatchResult::default();
        let mut det_kept: Vec<Option<usize>> = vec![None; n_det];
        for (j, w) in winner.iter().enumerate() {
            if let Some(i) = *w {
                det_kept[i] = Some(j);
            }
        }
        for (i, kept) in det_kept.iter().enumerate() {
            match *kept {
                Some(j) if gts[j].ignore => out.ignored_detections.push(i),
                Some(j) => out.pairs.push(MatchPair {
                    det: i,
                    gt: j,
                    iou: self.get(i, j),
                }),
                None => out.unmatched_detections.push(i),
            }
        }
        for (j, g) in gts.iter().enumerate() {
            if g.ignore {
                out.ignored_gts.push(j);
            } else if winner[j].is_none() {
                out.unmatched_gts.push(j);
            }
        }
        out
    }
}

/// Matches detections to ground truth at IoU threshold `tau`.
pub fn match_image(dets: &[Quad], gts: &[TextInstance], tau: f64) -> Result<MatchResult, GeometryError> {
    let m = IouMatrix::compute(dets, gts)?;
    Ok(m.assign(dets.len(), gts, tau))
}

/// Picks the variant with the highest per-image F at [`SELECTION_IOU`];
/// ties go to more true positives, then to the lower index.
///
/// # Panics
///
/// If `variants` is empty.
pub fn select_variant(
    dets: &[Quad],
    variants: &[GroundTruthVariant],
) -> Result<(usize, MatchResult), GeometryError> {
    let mut best: Option<(usize, MatchResult)> = None;
    for (vi, v) in variants.iter().enumerate() {
        let m = match_image(dets, &v.instances, SELECTION_IOU)?;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                let (c, bc) = (m.counts(), b.counts());
                c.cmp_f(&bc).then(c.tp.cmp(&bc.tp)).is_gt()
            }
        };
        if better {
            best = Some((vi, m));
        }
    }
    Ok(best.expect("at least one ground-truth variant"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdMetrics {
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    #[serde(flatten)]
    pub counts: Counts,
}

impl ThresholdMetrics {
    fn from_counts(iou: f64, counts: Counts) -> Self {
        Self {
            iou,
            precision: counts.precision(),
            recall: counts.recall(),
            f_score: counts.f_score(),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageDetection {
    pub image_id: String,
    pub variant: usize,
    pub n_variants: usize,
    /// Counts at each threshold, parallel to [`DetectionReport::thresholds`].
    pub counts: Vec<Counts>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub thresholds: Vec<ThresholdMetrics>,
    pub per_image: Vec<ImageDetection>,
}

impl DetectionReport {
    pub fn at(&self, iou: f64) -> Option<&ThresholdMetrics> {
        self.thresholds.iter().find(|t| t.iou == iou)
    }

    /// F-score at [`SELECTION_IOU`], the ranking metric.
    pub fn ranking_f(&self) -> f64 {
        self.at(SELECTION_IOU)
            .expect("selection threshold is always evaluated")
            .f_score
    }
}

/// Validates thresholds, adds the ranking threshold if absent, sorts and
/// de-duplicates.
pub fn normalize_thresholds(thresholds: &[f64]) -> Result<Vec<f64>, EvalError> {
    let mut out = Vec::with_capacity(thresholds.len() + 1);
    for &t in thresholds {
        if !(t > 0.0 && t < 1.0) {
            return Err(EvalError::Threshold(t));
        }
        out.push(t);
    }
    out.push(SELECTION_IOU);
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

fn quads(dets: &[Detection]) -> Vec<Quad> {
    dets.iter().map(|d| d.quad).collect()
}

/// Scores a detection submission. Images absent from the submission count
/// as having no detections; images unknown to the ground truth are skipped.
pub fn eval_task3(
    gt: &GroundTruth,
    pred: &DetectionSubmission,
    thresholds: &[f64],
    opts: &EvalOptions,
) -> Result<DetectionReport, EvalError> {
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let thresholds = normalize_thresholds(thresholds)?;
    let images: Vec<(&str, &[GroundTruthVariant])> = gt.iter().collect();
    let per_image = map_ordered(&images, opts.jobs, |&(id, variants)| {
        let dets = quads(pred.get(id));
        let geo = |source| EvalError::Geometry {
            image_id: id.to_owned(),
            source,
        };
        let (vi, _) = select_variant(&dets, variants).map_err(geo)?;
        let chosen = &variants[vi].instances;
        let matrix = IouMatrix::compute(&dets, chosen).map_err(geo)?;
        let counts = thresholds
            .iter()
            .map(|&t| matrix.assign(dets.len(), chosen, t).counts())
            .collect();
        Ok(ImageDetection {
            image_id: id.to_owned(),
            variant: vi,
            n_variants: variants.len(),
            counts,
        })
    })?;
    let mut totals = vec![Counts::default(); thresholds.len()];
    for img in &per_image {
        for (t, c) in totals.iter_mut().zip(&img.counts) {
            t.add(c);
        }
    }
    Ok(DetectionReport {
        thresholds: thresholds
            .iter()
            .zip(totals)
            .map(|(&t, c)| ThresholdMetrics::from_counts(t, c))
            .collect(),
        per_image,
    })
}
