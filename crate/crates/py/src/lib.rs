//! Python bindings: `import rre`.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use rre_core::leaderboard::load_manifest;
use rre_core::{
    coverage_warnings, parse_detection_submission, parse_ground_truth, parse_label_submission,
    report, EvalError, EvalOptions, GeometryError, LeaderboardError, ParseError, Task, Winding,
};

fn geometry_err(e: GeometryError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_err(e: ParseError) -> PyErr {
    match e {
        ParseError::Io { .. } => PyOSError::new_err(e.to_string()),
        ParseError::Format { .. } => PyValueError::new_err(e.to_string()),
    }
}

fn eval_err(e: EvalError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn board_err(e: LeaderboardError) -> PyErr {
    match e {
        LeaderboardError::Parse(p) => parse_err(p),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// Converts a report document to plain Python objects.
fn to_python<'py>(py: Python<'py>, doc: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (doc.to_string(),))
}

/// A quadrilateral from eight coordinates `x1, y1, ..., x4, y4`.
#[pyclass(name = "Quad", module = "rre", frozen)]
struct PyQuad(rre_core::Quad);

#[pymethods]
impl PyQuad {
    #[new]
    fn new(coords: Vec<f64>) -> PyResult<Self> {
        rre_core::Quad::from_slice(&coords).map(PyQuad).map_err(geometry_err)
    }

    /// Rectangle spanning `[x0, x1] x [y0, y1]`.
    #[staticmethod]
    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> PyResult<Self> {
        rre_core::Quad::rect(x0, y0, x1, y1).map(PyQuad).map_err(geometry_err)
    }

    #[getter]
    fn coords(&self) -> Vec<f64> {
        self.0.coords().to_vec()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.area()
    }

    /// Positive when clockwise in image coordinates (y down).
    #[getter]
    fn signed_area(&self) -> f64 {
        self.0.signed_area()
    }

    /// "clockwise", "counter-clockwise" or "degenerate".
    #[getter]
    fn winding(&self) -> &'static str {
        match self.0.winding() {
            Winding::Clockwise => "clockwise",
            Winding::CounterClockwise => "counter-clockwise",
            Winding::Degenerate => "degenerate",
        }
    }

    fn is_simple(&self) -> bool {
        self.0.is_simple()
    }

    fn is_convex(&self) -> bool {
        self.0.is_convex()
    }

    fn __repr__(&self) -> String {
        format!("Quad([{}])", self.0.coords().map(|c| c.to_string()).join(", "))
    }
}

#[pyfunction]
fn quad_area(q: PyRef<'_, PyQuad>) -> f64 {
    rre_core::quad_area(&q.0)
}

#[pyfunction]
fn intersection_area(a: PyRef<'_, PyQuad>, b: PyRef<'_, PyQuad>) -> PyResult<f64> {
    rre_core::intersection_area(&a.0, &b.0).map_err(geometry_err)
}

#[pyfunction]
fn iou(a: PyRef<'_, PyQuad>, b: PyRef<'_, PyQuad>) -> PyResult<f64> {
    rre_core::iou(&a.0, &b.0).map_err(geometry_err)
}

/// Folds full-width ASCII and ideographic spaces, lowercases ASCII.
#[pyfunction]
fn normalize(s: &str) -> String {
    rre_core::normalize(s)
}

#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    rre_core::levenshtein(a, b)
}

#[pyfunction]
fn norm_edit_distance(pred: &str, gt: &str) -> f64 {
    rre_core::norm_edit_distance(pred, gt)
}

fn recognition(py: Python<'_>, gt: PathBuf, pred: PathBuf, task: Task) -> PyResult<Bound<'_, PyAny>> {
    let gt = parse_label_submission(gt).map_err(parse_err)?;
    let pred = parse_label_submission(pred).map_err(parse_err)?;
    let warnings = coverage_warnings(gt.image_ids(), pred.image_ids());
    let r = match task {
        Task::Task1 => rre_core::eval_task1(&gt, &pred),
        _ => rre_core::eval_task2(&gt, &pred),
    }
    .map_err(eval_err)?;
    to_python(py, &report::recognition_json(&r, &warnings))
}

/// Task 1 report for a label ground truth and submission.
#[pyfunction]
fn eval_task1(py: Python<'_>, gt: PathBuf, pred: PathBuf) -> PyResult<Bound<'_, PyAny>> {
    recognition(py, gt, pred, Task::Task1)
}

/// Task 2 report for a label ground truth and submission.
#[pyfunction]
fn eval_task2(py: Python<'_>, gt: PathBuf, pred: PathBuf) -> PyResult<Bound<'_, PyAny>> {
    recognition(py, gt, pred, Task::Task2)
}

/// Task 3 report; 0.5 is always among the thresholds.
#[pyfunction]
#[pyo3(signature = (gt, pred, thresholds = vec![0.5, 0.7], jobs = 1))]
fn eval_task3(
    py: Python<'_>,
    gt: PathBuf,
    pred: PathBuf,
    thresholds: Vec<f64>,
    jobs: usize,
) -> PyResult<Bound<'_, PyAny>> {
    let gt = parse_ground_truth(gt).map_err(parse_err)?;
    let pred = parse_detection_submission(pred, false).map_err(parse_err)?;
    let mut warnings = gt.warnings;
    warnings.extend(pred.warnings);
    warnings.extend(coverage_warnings(gt.value.image_ids(), pred.value.image_ids()));
    let opts = EvalOptions { jobs: jobs.max(1) };
    let r = py
        .detach(|| rre_core::eval_task3(&gt.value, &pred.value, &thresholds, &opts))
        .map_err(eval_err)?;
    to_python(py, &report::detection_json(&r, &warnings))
}

/// Task 4 report; the submission must carry transcripts.
#[pyfunction]
#[pyo3(signature = (gt, pred, jobs = 1))]
fn eval_task4(py: Python<'_>, gt: PathBuf, pred: PathBuf, jobs: usize) -> PyResult<Bound<'_, PyAny>> {
    let gt = parse_ground_truth(gt).map_err(parse_err)?;
    let pred = parse_detection_submission(pred, true).map_err(parse_err)?;
    let mut warnings = gt.warnings;
    warnings.extend(pred.warnings);
    warnings.extend(coverage_warnings(gt.value.image_ids(), pred.value.image_ids()));
    let opts = EvalOptions { jobs: jobs.max(1) };
    let r = py
        .detach(|| rre_core::eval_task4(&gt.value, &pred.value, &opts))
        .map_err(eval_err)?;
    to_python(py, &report::e2e_json(&r, &warnings))
}

fn board(manifest: PathBuf, task: &str) -> PyResult<rre_core::Leaderboard> {
    let task: Task = task.parse().map_err(PyValueError::new_err)?;
    load_manifest(manifest)
        .and_then(|m| m.leaderboard(task))
        .map_err(board_err)
}

/// The aligned leaderboard table for one task of a manifest.
#[pyfunction]
fn leaderboard(manifest: PathBuf, task: &str) -> PyResult<String> {
    Ok(board(manifest, task)?.render_table())
}

/// The leaderboard for one task as a dict.
#[pyfunction]
fn leaderboard_json<'py>(py: Python<'py>, manifest: PathBuf, task: &str) -> PyResult<Bound<'py, PyAny>> {
    to_python(py, &board(manifest, task)?.to_json())
}

#[pymodule]
fn rre(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", report::VERSION)?;
    m.add_class::<PyQuad>()?;
    m.add_function(wrap_pyfunction!(quad_area, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_area, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(norm_edit_distance, m)?)?;
    m.add_function(wrap_pyfunction!(eval_task1, m)?)?;
    m.add_function(wrap_pyfunction!(eval_task2, m)?)?;
    m.add_function(wrap_pyfunction!(eval_task3, m)?)?;
    m.add_function(wrap_pyfunction!(eval_task4, m)?)?;
    m.add_function(wrap_pyfunction!(leaderboard, m)?)?;
    m.add_function(wrap_pyfunction!(leaderboard_json, m)?)?;
    Ok(())
}
