use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Quad;

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("quad coordinates must be finite")]
    NonFinite,
    #[error("expected 8 coordinates (4 vertices), got {0}")]
    VertexCount(usize),
    #[error("self-intersecting quad {0}")]
    SelfIntersecting(Quad),
    #[error("degenerate quad {0} has zero area")]
    Degenerate(Quad),
}

/// Failure to read or interpret an input file. `line` is 1-based.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: line {line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl ParseError {
    pub(crate) fn format(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        ParseError::Format {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Io { .. } => None,
            ParseError::Format { line, .. } => Some(*line),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("image {image_id}: {source}")]
    Geometry {
        image_id: String,
        #[source]
        source: GeometryError,
    },
    #[error("image {image_id}: detection {index} has no transcript")]
    MissingTranscript { image_id: String, index: usize },
    #[error("invalid IoU threshold {0}; must lie strictly between 0 and 1")]
    Threshold(f64),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Error)]
pub enum LeaderboardError {
    #[error("team {team:?} has {count} runs for {task}; at most {max} are accepted")]
    TooManyRuns {
        team: String,
        task: String,
        count: usize,
        max: usize,
    },
    #[error("no runs given")]
    NoRuns,
    #[error("run for team {team:?} needs either a score or a report path")]
    MissingScore { team: String },
    #[error("score {score} for team {team:?} is outside [0, 1]")]
    ScoreRange { team: String, score: f64 },
    #[error("report {}: {message}", path.display())]
    Report { path: PathBuf, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
}
