use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rre_core::annotation_io::{detections_from_str, ground_truth_from_str, labels_from_str};
use rre_core::leaderboard::load_manifest;
use rre_core::report;
use rre_core::{
    coverage_warnings, eval_task1, eval_task2, eval_task3, eval_task4, parse_detection_submission,
    parse_ground_truth, parse_label_submission, Diagnostic, EvalError, EvalOptions,
    LeaderboardError, ParseError, Task,
};

#[derive(Parser)]
#[command(name = "rre", version, about = "Scoring toolkit for signboard text reading tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cropped-line recognition scored by exact-match accuracy.
    Task1(RecognitionArgs),
    /// Cropped-line recognition scored by 1 - normalized edit distance.
    Task2(RecognitionArgs),
    /// Text-line detection scored by F-score at IoU thresholds.
    Task3(DetectionArgs),
    /// Detection plus recognition scored by 1 - normalized edit distance.
    Task4(ScoringArgs),
    /// Rank teams from a manifest of runs.
    Leaderboard(LeaderboardArgs),
    /// Run the parse-time checks without scoring.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ScoringArgs {
    /// Ground truth file.
    #[arg(long)]
    gt: PathBuf,
    /// Submission file.
    #[arg(long)]
    pred: PathBuf,
    /// Where to write the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Treat warnings as errors.
    #[arg(long)]
    strict: bool,
    /// Worker threads (defaults to the available cores).
    #[arg(long, env = "RRE_JOBS", value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
}

impl ScoringArgs {
    fn options(&self) -> EvalOptions {
        let jobs = match self.jobs {
            Some(j) => j as usize,
            None => std::thread::available_parallelism().map_or(1, usize::from),
        };
        EvalOptions { jobs }
    }
}

#[derive(Args)]
struct RecognitionArgs {
    #[command(flatten)]
    common: ScoringArgs,
}

#[derive(Args)]
struct DetectionArgs {
    #[command(flatten)]
    common: ScoringArgs,
    /// Comma-separated IoU thresholds; 0.5 is always included.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.7", value_parser = threshold)]
    iou: Vec<f64>,
}

#[derive(Args)]
struct LeaderboardArgs {
    /// JSON manifest listing the runs.
    #[arg(long)]
    manifest: PathBuf,
    /// Only this task (task1..task4); all tasks in the manifest otherwise.
    #[arg(long)]
    task: Option<Task>,
    /// Number of ranked rows to show; overrides the manifest.
    #[arg(long)]
    top: Option<usize>,
    /// Also write the leaderboards as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Ground truth: `.json` for detection, a label file otherwise.
    #[arg(long)]
    gt: PathBuf,
    /// Optional submission checked against the ground truth.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Treat warnings as errors.
    #[arg(long)]
    strict: bool,
}

fn threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(format!("{t} is outside (0, 1)"))
    }
}

/// A failed run: exit 1 for validation failures, 2 for I/O and format errors.
enum Failure {
    Invalid(String),
    Input(String),
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<LeaderboardError> for Failure {
    fn from(e: LeaderboardError) -> Self {
        match e {
            LeaderboardError::Parse(_) | LeaderboardError::Report { .. } => {
                Failure::Input(e.to_string())
            }
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Task1(a) => recognition(&a.common, Task::Task1),
        Command::Task2(a) => recognition(&a.common, Task::Task2),
        Command::Task3(a) => detection(&a.common, &a.iou),
        Command::Task4(a) => end_to_end(&a),
        Command::Leaderboard(a) => leaderboard(&a),
        Command::Validate(a) => validate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Prints warnings; in strict mode any warning fails the run.
fn report_warnings(warnings: &[Diagnostic], strict: bool) -> Result<(), Failure> {
    for w in warnings {
        eprintln!("{w}");
    }
    if strict && !warnings.is_empty() {
        return Err(Failure::Invalid(format!(
            "{} warning(s) in strict mode",
            warnings.len()
        )));
    }
    Ok(())
}

fn write_report(path: Option<&Path>, doc: &serde_json::Value) -> Result<(), Failure> {
    if let Some(path) = path {
        std::fs::write(path, report::to_pretty(doc))
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn recognition(args: &ScoringArgs, task: Task) -> Result<(), Failure> {
    let gt = parse_label_submission(&args.gt)?;
    let pred = parse_label_submission(&args.pred)?;
    let warnings = coverage_warnings(gt.image_ids(), pred.image_ids());
    report_warnings(&warnings, args.strict)?;
    let r = match task {
        Task::Task1 => eval_task1(&gt, &pred)?,
        _ => eval_task2(&gt, &pred)?,
    };
    write_report(args.report.as_deref(), &report::recognition_json(&r, &warnings))?;
    println!("{}", report::recognition_summary(&r));
    Ok(())
}

fn detection(args: &ScoringArgs, thresholds: &[f64]) -> Result<(), Failure> {
    let gt = parse_ground_truth(&args.gt)?;
    let pred = parse_detection_submission(&args.pred, false)?;
    let mut warnings = gt.warnings;
    warnings.extend(pred.warnings);
    warnings.extend(coverage_warnings(gt.value.image_ids(), pred.value.image_ids()));
    report_warnings(&warnings, args.strict)?;
    let r = eval_task3(&gt.value, &pred.value, thresholds, &args.options())?;
    write_report(args.report.as_deref(), &report::detection_json(&r, &warnings))?;
    println!("{}", report::detection_summary(&r));
    Ok(())
}

fn end_to_end(args: &ScoringArgs) -> Result<(), Failure> {
    let gt = parse_ground_truth(&args.gt)?;
    let pred = parse_detection_submission(&args.pred, true)?;
    let mut warnings = gt.warnings;
    warnings.extend(pred.warnings);
    warnings.extend(coverage_warnings(gt.value.image_ids(), pred.value.image_ids()));
    report_warnings(&warnings, args.strict)?;
    let r = eval_task4(&gt.value, &pred.value, &args.options())?;
    write_report(args.report.as_deref(), &report::e2e_json(&r, &warnings))?;
    println!("{}", report::e2e_summary(&r));
    Ok(())
}

fn leaderboard(args: &LeaderboardArgs) -> Result<(), Failure> {
    let mut manifest = load_manifest(&args.manifest)?;
    if args.top.is_some() {
        manifest.top = args.top;
    }
    let tasks = match args.task {
        Some(t) => vec![t],
        None => manifest.tasks(),
    };
    if tasks.is_empty() {
        return Err(LeaderboardError::NoRuns.into());
    }
    let mut boards = Vec::with_capacity(tasks.len());
    for task in tasks {
        boards.push(manifest.leaderboard(task)?);
    }
    let many = boards.len() > 1;
    for (i, board) in boards.iter().enumerate() {
        if many {
            if i > 0 {
                println!();
            }
            println!("{}", board.task);
        }
        print!("{}", board.render_table());
    }
    if let Some(path) = &args.json {
        let doc = serde_json::Value::Array(boards.iter().map(|b| b.to_json()).collect());
        write_report(Some(path), &doc)?;
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(text.strip_prefix('\u{FEFF}').map(str::to_owned).unwrap_or(text))
}

/// Format problems are the findings of `validate`, so they exit 1; only
/// unreadable files exit 2.
fn finding(e: ParseError) -> Failure {
    match e {
        ParseError::Io { .. } => Failure::Input(e.to_string()),
        ParseError::Format { .. } => Failure::Invalid(e.to_string()),
    }
}

fn validate(args: &ValidateArgs) -> Result<(), Failure> {
    let gt_text = read(&args.gt)?;
    let is_detection = args.gt.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut warnings = Vec::new();
    let n_images;
    if is_detection {
        let gt = ground_truth_from_str(&gt_text, &args.gt).map_err(finding)?;
        warnings.extend(gt.warnings);
        n_images = gt.value.len();
        if let Some(p) = &args.pred {
            let text = read(p)?;
            // the end-to-end layout carries a third field on every line
            let with_transcripts = text.lines().any(|l| l.matches('\t').count() >= 2);
            let pred = detections_from_str(&text, p, with_transcripts).map_err(finding)?;
            warnings.extend(pred.warnings);
            warnings.extend(coverage_warnings(gt.value.image_ids(), pred.value.image_ids()));
        }
    } else {
        let gt = labels_from_str(&gt_text, &args.gt).map_err(finding)?;
        n_images = gt.len();
        if let Some(p) = &args.pred {
            let pred = labels_from_str(&read(p)?, p).map_err(finding)?;
            warnings.extend(coverage_warnings(gt.image_ids(), pred.image_ids()));
        }
    }
    report_warnings(&warnings, args.strict)?;
    println!("ok: {n_images} ground-truth images, {} warning(s)", warnings.len());
    Ok(())
}
