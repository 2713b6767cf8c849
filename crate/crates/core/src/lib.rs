//! Scoring for scene-text reading benchmarks.
//!
//! Four tasks are supported: character recognition (accuracy), text-line
//! recognition (one minus mean normalized edit distance), text-line
//! detection (one-to-one IoU matching, precision/recall/F at IoU 0.5 and
//! 0.7) and end-to-end recognition (matching followed by edit distance).
//! Detection ground truth may carry several equally valid annotation
//! variants per image; each image is scored against the variant that suits
//! the submission best.

pub mod annotation_io;
pub mod error;
pub mod evaluator_detection;
pub mod evaluator_e2e;
pub mod evaluator_recognition;
pub mod geometry;
pub mod leaderboard;
mod parallel;
pub mod report;
pub mod text_metrics;

pub use annotation_io::{
    coverage_warnings, parse_detection_submission, parse_ground_truth, parse_label_submission,
    Detection, DetectionSubmission, Diagnostic, GroundTruth, GroundTruthVariant, LabelSet, Parsed,
    Severity, TextInstance,
};
pub use error::{EvalError, GeometryError, LeaderboardError, ParseError};
pub use evaluator_detection::{
    eval_task3, match_image, select_variant, Counts, DetectionReport, MatchPair, MatchResult,
    DEFAULT_THRESHOLDS, SELECTION_IOU,
};
pub use evaluator_e2e::{eval_task4, E2EReport};
pub use evaluator_recognition::{eval_task1, eval_task2, RecognitionReport, RecognitionTask};
pub use geometry::{intersection_area, iou, quad_area, Point, Quad, Winding};
pub use leaderboard::{best_of_runs, build_leaderboard, Leaderboard, LeaderboardEntry, RunRecord, Task};
pub use text_metrics::{levenshtein, norm_edit_distance, normalize};

/// Execution settings shared by the corpus evaluators. Results do not
/// depend on `jobs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}
