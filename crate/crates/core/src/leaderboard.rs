//! Per-task rankings under the best-of-five submission rule.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LeaderboardError, ParseError};

/// Runs a team may submit per task.
pub const MAX_RUNS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Task1,
    Task2,
    Task3,
    Task4,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Task1, Task::Task2, Task::Task3, Task::Task4];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Task1 => "task1",
            Task::Task2 => "task2",
            Task::Task3 => "task3",
            Task::Task4 => "task4",
        }
    }

    /// Column header for the ranking metric.
    pub fn metric_name(self) -> &'static str {
        match self {
            Task::Task1 => "Accuracy",
            Task::Task2 | Task::Task4 => "N.E.D",
            Task::Task3 => "F-score",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task {s:?}; expected task1..task4"))
    }
}

/// One scored submission.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub team: String,
    pub affiliation: String,
    pub task: Task,
    pub score: f64,
    pub run_label: String,
    /// Display marker only.
    pub student: bool,
    /// Organizer reference run: listed below the ranked teams, unranked.
    pub baseline: bool,
}

impl RunRecord {
    pub fn new(team: &str, affiliation: &str, task: Task, score: f64) -> Self {
        Self {
            team: team.to_owned(),
            affiliation: affiliation.to_owned(),
            task,
            score,
            run_label: String::new(),
            student: false,
            baseline: false,
        }
    }
}

/// The highest-scoring run of one team; the earliest run wins ties.
pub fn best_of_runs(runs: &[RunRecord]) -> Result<&RunRecord, LeaderboardError> {
    let first = runs.first().ok_or(LeaderboardError::NoRuns)?;
    if runs.len() > MAX_RUNS {
        return Err(LeaderboardError::TooManyRuns {
            team: first.team.clone(),
            task: first.task.to_string(),
            count: runs.len(),
            max: MAX_RUNS,
        });
    }
    Ok(runs
        .iter()
        .fold(first, |best, r| if r.score > best.score { r } else { best }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardEntry {
    /// `None` for baseline rows.
    pub rank: Option<usize>,
    pub team: String,
    pub affiliation: String,
    pub best_score: f64,
    pub run_label: String,
    pub student: bool,
    pub baseline: bool,
}

impl LeaderboardEntry {
    /// Team name with the student marker; a name that already carries
    /// the marker is left alone.
    pub fn display_name(&self) -> String {
        if self.student && !self.team.ends_with('*') {
            format!("{} *", self.team)
        } else {
            self.team.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaderboard {
    pub task: Task,
    pub metric: &'static str,
    pub entries: Vec<LeaderboardEntry>,
}

/// Ranks teams by their best run. Equal scores share a rank and the next
/// rank skips (1, 1, 3). Baseline runs are kept out of the ranking and
/// listed after the teams.
pub fn build_leaderboard(task: Task, runs: &[RunRecord]) -> Result<Leaderboard, LeaderboardError> {
    // group by (team, baseline) in first-appearance order
    let mut order: Vec<(String, bool)> = Vec::new();
    let mut groups: HashMap<(String, bool), Vec<RunRecord>> = HashMap::new();
    for r in runs.iter().filter(|r| r.task == task) {
        if !(0.0..=1.0).contains(&r.score) {
            return Err(LeaderboardError::ScoreRange {
                team: r.team.clone(),
                score: r.score,
            });
        }
        let key = (r.team.clone(), r.baseline);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r.clone());
    }
    let mut teams = Vec::with_capacity(order.len());
    let mut baselines = Vec::new();
    for key in &order {
        let best = best_of_runs(&groups[key])?;
        let entry = LeaderboardEntry {
            rank: None,
            team: best.team.clone(),
            affiliation: best.affiliation.clone(),
            best_score: best.score,
            run_label: best.run_label.clone(),
            student: best.student,
            baseline: best.baseline,
        };
        if best.baseline {
            baselines.push(entry);
        } else {
            teams.push(entry);
        }
    }
    let by_score = |a: &LeaderboardEntry, b: &LeaderboardEntry| b.best_score.total_cmp(&a.best_score);
    teams.sort_by(by_score);
    baselines.sort_by(by_score);
    for i in 0..teams.len() {
        let rank = if i > 0 && teams[i].best_score == teams[i - 1].best_score {
            teams[i - 1].rank
        } else {
            Some(i + 1)
        };
        teams[i].rank = rank;
    }
    teams.extend(baselines);
    Ok(Leaderboard {
        task,
        metric: task.metric_name(),
        entries: teams,
    })
}

/// Score as printed in the tables.
pub fn format_score(score: f64) -> String {
    format!("{score:.4}")
}

impl Leaderboard {
    /// Keeps the first `n` ranked entries (and every baseline row).
    pub fn top(mut self, n: usize) -> Self {
        let mut kept = 0;
        self.entries.retain(|e| {
            if e.baseline {
                return true;
            }
            kept += 1;
            kept <= n
        });
        self
    }

    pub fn ranked(&self) -> impl Iterator<Item = &LeaderboardEntry> {
        self.entries.iter().filter(|e| !e.baseline)
    }

    /// Aligned plain-text table: Ranking, Team Name, Affiliation, metric.
    pub fn render_table(&self) -> String {
        let header = [
            "Ranking".to_owned(),
            "Team Name".to_owned(),
            "Affiliation".to_owned(),
            self.metric.to_owned(),
        ];
        let rows: Vec<[String; 4]> = self
            .entries
            .iter()
            .map(|e| {
                [
                    match e.rank {
                        Some(r) => r.to_string(),
                        None => "Baseline".to_owned(),
                    },
                    e.display_name(),
                    e.affiliation.clone(),
                    format_score(e.best_score),
                ]
            })
            .collect();
        let mut widths = [0usize; 4];
        for row in std::iter::once(&header).chain(&rows) {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&header).chain(&rows) {
            let mut line = String::new();
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    line.push_str("  ");
                }
                line.push_str(cell);
                if i + 1 < row.len() {
                    let pad = widths[i] - cell.chars().count();
                    line.extend(std::iter::repeat_n(' ', pad));
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "task": self.task,
            "metric": self.metric,
            "entries": self.entries.iter().map(|e| serde_json::json!({
                "rank": e.rank,
                "team": e.team,
                "affiliation": e.affiliation,
                "score": e.best_score,
                "score_display": format_score(e.best_score),
                "run_label": e.run_label,
                "student": e.student,
                "baseline": e.baseline,
            })).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------------------
// Manifest

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestRun {
    team: String,
    #[serde(default)]
    affiliation: String,
    task: Task,
    score: Option<f64>,
    report: Option<PathBuf>,
    #[serde(default)]
    run_label: String,
    #[serde(default)]
    student: bool,
    #[serde(default)]
    baseline: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    runs: Vec<ManifestRun>,
    top: Option<usize>,
}

/// Runs listed in a manifest, plus its optional table length.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub runs: Vec<RunRecord>,
    pub top: Option<usize>,
}

impl Manifest {
    /// Tasks that have at least one run, in task order.
    pub fn tasks(&self) -> Vec<Task> {
        let mut t: Vec<Task> = self.runs.iter().map(|r| r.task).collect();
        t.sort();
        t.dedup();
        t
    }

    pub fn leaderboard(&self, task: Task) -> Result<Leaderboard, LeaderboardError> {
        let board = build_leaderboard(task, &self.runs)?;
        Ok(match self.top {
            Some(n) => board.top(n),
            None => board,
        })
    }
}

/// Reads the ranking score out of an evaluator report.
fn score_from_report(path: &Path, task: Task) -> Result<f64, LeaderboardError> {
    let err = |message: String| LeaderboardError::Report {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    let got = v.get("task").and_then(|t| t.as_str()).unwrap_or("");
    if got != task.as_str() {
        return Err(err(format!("report is for {got:?}, manifest says {task}")));
    }
    v.get("score")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| err("missing numeric \"score\"".into()))
}

/// Parses a manifest. Report paths are resolved against `base_dir`.
pub fn manifest_from_str(text: &str, origin: &Path, base_dir: &Path) -> Result<Manifest, LeaderboardError> {
    let file: ManifestFile = serde_json::from_str(text).map_err(|e| {
        LeaderboardError::Parse(ParseError::Format {
            path: origin.to_path_buf(),
            line: e.line().max(1),
            message: crate::annotation_io::json_message(&e),
        })
    })?;
    let mut runs = Vec::with_capacity(file.runs.len());
    for r in file.runs {
        let score = match (r.score, &r.report) {
            (Some(s), _) => s,
            (None, Some(p)) => score_from_report(&base_dir.join(p), r.task)?,
            (None, None) => return Err(LeaderboardError::MissingScore { team: r.team }),
        };
        runs.push(RunRecord {
            team: r.team,
            affiliation: r.affiliation,
            task: r.task,
            score,
            run_label: r.run_label,
            student: r.student,
            baseline: r.baseline,
        });
    }
    Ok(Manifest {
        runs,
        top: file.top,
    })
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, LeaderboardError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    manifest_from_str(&text, path, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(team: &str, score: f64) -> RunRecord {
        RunRecord::new(team, "", Task::Task1, score)
    }

    #[test]
    fn best_run_is_max() {
        let runs = [run("a", 0.90), run("a", 0.95), run("a", 0.93)];
        assert_eq!(best_of_runs(&runs).unwrap().score, 0.95);
        assert_eq!(best_of_runs(&[run("a", 0.80)]).unwrap().score, 0.80);
    }

    #[test]
    fn best_run_tie_keeps_first() {
        let mut runs = [run("a", 0.9), run("a", 0.9)];
        runs[0].run_label = "first".into();
        runs[1].run_label = "second".into();
        assert_eq!(best_of_runs(&runs).unwrap().run_label, "first");
    }

    #[test]
    fn run_cap() {
        let runs: Vec<_> = (0..6).map(|i| run("a", i as f64 / 10.0)).collect();
        assert!(matches!(
            best_of_runs(&runs),
            Err(LeaderboardError::TooManyRuns { count: 6, .. })
        ));
        assert!(best_of_runs(&runs[..5]).is_ok());
        assert!(matches!(best_of_runs(&[]), Err(LeaderboardError::NoRuns)));
    }

    #[test]
    fn ties_share_rank() {
        let b = build_leaderboard(Task::Task1, &[run("a", 0.9), run("b", 0.9), run("c", 0.8)]).unwrap();
        let ranks: Vec<_> = b.entries.iter().map(|e| e.rank).collect();
        assert_eq!(ranks, [Some(1), Some(1), Some(3)]);
    }

    #[test]
    fn other_tasks_are_ignored() {
        let mut r = run("x", 0.99);
        r.task = Task::Task2;
        let b = build_leaderboard(Task::Task1, &[r, run("a", 0.5)]).unwrap();
        assert_eq!(b.entries.len(), 1);
    }

    #[test]
    fn baseline_rows_are_unranked_and_last() {
        let mut base = run("", 0.99);
        base.baseline = true;
        base.affiliation = "Organizer".into();
        let b = build_leaderboard(Task::Task1, &[base, run("a", 0.5)]).unwrap();
        assert_eq!(b.entries[0].rank, Some(1));
        assert_eq!(b.entries[1].rank, None);
        let table = b.render_table();
        assert!(table.lines().nth(2).unwrap().starts_with("Baseline"));
    }

    #[test]
    fn student_marker_is_not_doubled() {
        let mut a = RunRecord::new("Lab", "U", Task::Task2, 0.9);
        a.student = true;
        let mut b = RunRecord::new("Crew*", "U", Task::Task2, 0.8);
        b.student = true;
        let board = build_leaderboard(Task::Task2, &[a, b]).unwrap();
        let names: Vec<String> = board.entries.iter().map(|e| e.display_name()).collect();
        assert_eq!(names, ["Lab *", "Crew*"]);
    }

    #[test]
    fn table_layout() {
        let mut s = run("Team", 0.5);
        s.student = true;
        s.affiliation = "Uni".into();
        s.task = Task::Task3;
        let b = build_leaderboard(Task::Task3, &[s]).unwrap();
        assert_eq!(
            b.render_table(),
            "Ranking  Team Name  Affiliation  F-score\n1        Team *     Uni          0.5000\n"
        );
    }

    #[test]
    fn score_out_of_range() {
        assert!(build_leaderboard(Task::Task1, &[run("a", 1.5)]).is_err());
        assert!(build_leaderboard(Task::Task1, &[run("a", f64::NAN)]).is_err());
    }

    #[test]
    fn manifest_needs_a_score() {
        let text = r#"{"runs": [{"team": "a", "task": "task1"}]}"#;
        let err = manifest_from_str(text, Path::new("m.json"), Path::new(".")).unwrap_err();
        assert!(matches!(err, LeaderboardError::MissingScore { .. }));
    }

    #[test]
    fn manifest_reads_report_scores() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("r.json"), r#"{"task": "task3", "score": 0.8}"#).unwrap();
        let text = r#"{"runs": [{"team": "a", "task": "task3", "report": "r.json"}]}"#;
        let m = manifest_from_str(text, Path::new("m.json"), dir.path()).unwrap();
        assert_eq!(m.runs[0].score, 0.8);
        let text = r#"{"runs": [{"team": "a", "task": "task1", "report": "r.json"}]}"#;
        assert!(manifest_from_str(text, Path::new("m.json"), dir.path()).is_err());
    }
}
