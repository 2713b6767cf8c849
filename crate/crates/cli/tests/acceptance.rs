//! Acceptance checks, one PASS/FAIL line per criterion. Run with
//! `cargo test -p rre-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rre_core::evaluator_detection::IouMatrix;
use rre_core::evaluator_e2e::{select_variant_e2e, variant_terms};
use rre_core::text_metrics::levenshtein_chars;
use rre_core::{
    eval_task1, eval_task2, eval_task3, eval_task4, iou, match_image, norm_edit_distance,
    normalize, select_variant, Detection, DetectionSubmission, EvalOptions, GroundTruth,
    GroundTruthVariant, LabelSet, Quad, TextInstance,
};
use rre_testkit::{
    all_strings, convex_pair, convex_quad_at, levenshtein_brute, monte_carlo_iou, quad,
    random_text, rng, simple_quad, synthetic_corpus, synthetic_image, Rng,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("leaderboard reproduction", leaderboard_reproduction),
        ("edit-distance oracle", edit_distance_oracle),
        ("IoU oracle", iou_oracle),
        ("matching hand trace", matching_hand_trace),
        ("multi-variant dominance", multi_variant_dominance),
        ("invariant suite", invariant_suite),
        ("determinism under parallelism", determinism),
        ("merged-vs-split scenario", merged_vs_split),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    if took < limit {
        Ok(())
    } else {
        Err(format!("{what} took {:.2}s, limit {:.0}s", took.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn rre(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rre"))
        .args(args)
        .env_remove("RRE_JOBS")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "rre {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// 1

const SCUT: &str = "South China University of Technology, The University of Adelaide, Northwestern Polytechnical University, Lenovo, HUAWEI";
const TENCENT: &str = "Tencent (Data Platform Precision Recommendation)";
const HUST_VLR: &str = "Huazhong University of Science and Technology (Visual and Learning Representation Group)";
const CLOVA: &str = "Clova AI OCR Team, NAVER/LINE Corp";
const MEITUAN: &str = "Meituan Dianping";

type Row = [&'static str; 4];

/// Published rows per task: ranking, team, affiliation, score.
fn published() -> Vec<(&'static str, &'static str, Vec<Row>)> {
    vec![
        ("task1", "Accuracy", vec![
            ["1", "BASELINE-v1", "iFLYTEK, University of Science and Technology of China", "0.9737"],
            ["2", "Amap_CVLab", "Alibaba AMAP", "0.9728"],
            ["3", "TPS-ResNet-v1", CLOVA, "0.9612"],
            ["4", "SANHL_v4", SCUT, "0.9594"],
            ["5", "Tencent-DPPR", TENCENT, "0.9512"],
            ["Baseline", "", MEITUAN, "0.9140"],
        ]),
        ("task2", "N.E.D", vec![
            ["1", "SANHL_v1", SCUT, "0.9555"],
            ["2", "Tencent-DPPR", TENCENT, "0.9486"],
            ["3", "HH-Lab-v4 *", HUST_VLR, "0.9483"],
            ["4", "TPS-ResNet-v1", CLOVA, "0.9477"],
            ["5", "Baseline-Beihang*", "Beihang University", "0.9437"],
            ["Baseline", "", MEITUAN, "0.9089"],
        ]),
        ("task3", "F-score", vec![
            ["1", "SANHL_v4", SCUT, "0.9336"],
            ["2", "Tencent-DPPR", TENCENT, "0.9303"],
            ["3", "Amap-CVLab", "Alibaba AMAP, Alibaba DAMO Academy for Discovery, Adventure, Momentum and Outlook", "0.9250"],
            ["4", "HH-Lab *", HUST_VLR, "0.9127"],
            ["5", "maskrcnn_text *", "Huazhong University of Science and Technology (Media and Communication Laboratory, Text detection)", "0.9102"],
            ["Baseline", "", MEITUAN, "0.9001"],
        ]),
        ("task4", "N.E.D", vec![
            ["1", "Tencent-DPPR", TENCENT, "0.8150"],
            ["2", "SANHL_v1", SCUT, "0.8144"],
            ["3", "HH-Lab *", HUST_VLR, "0.7943"],
            ["4", "baseline Beihang *", "Beihang University", "0.7661"],
            ["5", "SECAI *", "Institute of Information Engineering, Chinese Academy of Sciences, University of Science & Technology Beijing", "0.7437"],
            ["Baseline", "", MEITUAN, "0.7298"],
        ]),
    ]
}

/// Splits an aligned table into cells using the header's column offsets.
fn cells(table: &str) -> Result<Vec<Vec<String>>, String> {
    let mut lines = table.lines();
    let header = lines.next().ok_or("empty table")?;
    let hc: Vec<char> = header.chars().collect();
    let mut starts = vec![0];
    for name in ["Team Name", "Affiliation"] {
        let byte = header.find(name).ok_or(format!("no {name:?} column"))?;
        starts.push(header[..byte].chars().count());
    }
    let aff_end = starts[2] + "Affiliation".len();
    let metric_at = (aff_end..hc.len())
        .find(|&i| hc[i] != ' ')
        .ok_or("no metric column")?;
    starts.push(metric_at);
    let split = |line: &str| -> Vec<String> {
        let c: Vec<char> = line.chars().collect();
        (0..4)
            .map(|k| {
                let a = starts[k].min(c.len());
                let b = if k == 3 { c.len() } else { starts[k + 1].min(c.len()) };
                c[a..b].iter().collect::<String>().trim().to_owned()
            })
            .collect()
    };
    let mut out = vec![split(header)];
    out.extend(lines.map(split));
    Ok(out)
}

fn leaderboard_reproduction() -> Outcome {
    let start = Instant::now();
    for (i, (task, metric, rows)) in published().into_iter().enumerate() {
        let manifest = fixtures().join(format!("leaderboard/table{}.json", i + 1));
        let out = rre(&["leaderboard", "--manifest", manifest.to_str().unwrap(), "--task", task])?;
        let got = cells(&out)?;
        let head = ["Ranking", "Team Name", "Affiliation", metric];
        if got[0] != head {
            return Err(format!("{task}: header {:?}", got[0]));
        }
        if got.len() != rows.len() + 1 {
            return Err(format!("{task}: {} rows, want {}", got.len() - 1, rows.len()));
        }
        for (g, want) in got[1..].iter().zip(&rows) {
            if g != want {
                return Err(format!("{task}: row {g:?}, want {want:?}"));
            }
        }
    }
    within(Duration::from_secs(1), start, "four leaderboards")?;
    Ok("4 tables, 24 rows match exactly".into())
}

// ---------------------------------------------------------------------------
// 2

fn edit_distance_oracle() -> Outcome {
    let start = Instant::now();
    let strings = all_strings(&['a', 'b', 'c'], 6);
    let bad: Vec<(String, String)> = strings
        .par_iter()
        .flat_map_iter(|a| {
            strings
                .iter()
                .filter(move |b| levenshtein_chars(a, b) != levenshtein_brute(a, b))
                .map(move |b| (a.iter().collect(), b.iter().collect()))
        })
        .collect();
    if let Some((a, b)) = bad.first() {
        return Err(format!("{} mismatches, first {a:?} vs {b:?}", bad.len()));
    }
    within(Duration::from_secs(30), start, "exhaustive check")?;
    Ok(format!("{} pairs exact", strings.len() * strings.len()))
}

// ---------------------------------------------------------------------------
// 3

fn iou_oracle() -> Outcome {
    let start = Instant::now();
    let errors: Vec<f64> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(0x10_0000 + i);
            let (a, b) = convex_pair(&mut r);
            // 1000 x 1000 jittered grid: 10^6 samples
            let mc = monte_carlo_iou(a, b, 1000, &mut r);
            (iou(&quad(a), &quad(b)).unwrap() - mc).abs()
        })
        .collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    if worst > 0.005 {
        return Err(format!("max |iou - mc| = {worst:.5} > 0.005"));
    }
    within(Duration::from_secs(60), start, "1000 pairs")?;
    Ok(format!("{} pairs, max |iou - mc| = {worst:.5}", errors.len()))
}

// ---------------------------------------------------------------------------
// 4

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Quad {
    Quad::rect(x0, y0, x1, y1).unwrap()
}

fn matching_hand_trace() -> Outcome {
    let mut gt = GroundTruth::new();
    gt.insert(
        "img",
        vec![GroundTruthVariant::new(vec![
            TextInstance::new(rect(0., 0., 10., 10.), "a", false),
            TextInstance::new(rect(100., 0., 110., 10.), "b", false),
        ])],
    )
    .unwrap();
    let mut pred = DetectionSubmission::new();
    // IoU 0.6 and 0.55 against the first box, 0.3 against the second
    for q in [rect(0., 0., 10., 6.), rect(0., 0., 10., 5.5), rect(100., 0., 110., 3.)] {
        pred.push("img", Detection::new(q));
    }
    let r = eval_task3(&gt, &pred, &[0.5], &EvalOptions::default()).map_err(|e| e.to_string())?;
    let t = r.at(0.5).ok_or("no 0.5 row")?;
    let got = (t.counts.tp, t.precision, t.recall, t.f_score);
    if got != (1, 1.0 / 3.0, 0.5, 0.4) {
        return Err(format!("tp, P, R, F = {got:?}"));
    }
    Ok("tp=1 P=1/3 R=1/2 F=0.4".into())
}

// ---------------------------------------------------------------------------
// 5

/// Predictions unrelated to any annotation.
fn random_detections(r: &mut impl Rng) -> Vec<Detection> {
    (0..r.gen_range(0..12))
        .map(|_| {
            let (cx, cy) = (r.gen_range(0.0..400.0), r.gen_range(0.0..400.0));
            let (rx, ry) = (r.gen_range(10.0..120.0), r.gen_range(8.0..40.0));
            let q = quad(convex_quad_at(r, cx, cy, rx, ry));
            let len = r.gen_range(0..6);
            Detection::with_transcript(q, random_text(r, len))
        })
        .collect()
}

fn multi_variant_dominance() -> Outcome {
    let mut violations = Vec::new();
    for i in 0..200u64 {
        let mut r = rng(0x20_0000 + i);
        let n_variants = r.gen_range(2..=4);
        let rows = r.gen_range(1..=6);
        let (variants, mut dets) = synthetic_image(&mut r, n_variants, rows);
        if r.gen_bool(0.3) {
            dets = random_detections(&mut r);
        }
        let q: Vec<Quad> = dets.iter().map(|d| d.quad).collect();
        let (_, chosen) = select_variant(&q, &variants).map_err(|e| e.to_string())?;
        let (_, best) = select_variant_e2e("img", &dets, &variants).map_err(|e| e.to_string())?;
        for (vi, v) in variants.iter().enumerate() {
            let m = match_image(&q, &v.instances, 0.5).map_err(|e| e.to_string())?;
            if chosen.counts().f_score() < m.counts().f_score() {
                violations.push(format!("image {i} task3 variant {vi}"));
            }
            let t = variant_terms("img", &dets, v).map_err(|e| e.to_string())?;
            if best.mean_distance() > t.mean_distance() {
                violations.push(format!("image {i} task4 variant {vi}"));
            }
        }
    }
    if violations.is_empty() {
        Ok("200 images, 0 violations".into())
    } else {
        Err(format!("{} violations: {:?}", violations.len(), &violations[..violations.len().min(5)]))
    }
}

// ---------------------------------------------------------------------------
// 6

fn text_case(r: &mut impl Rng) -> String {
    let len = r.gen_range(0..10);
    let mut s = random_text(r, len);
    // mix in the characters folding touches
    for _ in 0..r.gen_range(0..3) {
        let c = ['Ａ', 'ｚ', '０', '　', 'Q', '！', ' '][r.gen_range(0..7)];
        s.push(c);
    }
    s
}

fn image_corpus(r: &mut impl Rng) -> (GroundTruth, DetectionSubmission) {
    let mut gt = GroundTruth::new();
    let mut pred = DetectionSubmission::new();
    for k in 0..r.gen_range(1..4) {
        let id = format!("i{k}");
        let n_variants = r.gen_range(1..=3);
        let rows = r.gen_range(0..=5);
        let (variants, dets) = synthetic_image(r, n_variants, rows);
        for d in dets {
            pred.push(id.clone(), d);
        }
        gt.insert(id, variants).unwrap();
    }
    (gt, pred)
}

fn invariant_suite() -> Outcome {
    const CASES: u64 = 1000;
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, seed: u64, ok: bool| {
        if !ok && failures.len() < 10 {
            failures.push(format!("{name} (seed {seed})"));
        }
    };
    let opts = EvalOptions::default();
    for seed in 0..CASES {
        let mut r = rng(0x30_0000 + seed);

        let (a, b) = (quad(simple_quad(&mut r)), quad(simple_quad(&mut r)));
        let ab = iou(&a, &b).unwrap();
        check("iou symmetry", seed, ab == iou(&b, &a).unwrap());
        check("iou bounds", seed, (0.0..=1.0).contains(&ab));
        check("iou identity", seed, (iou(&a, &a).unwrap() - 1.0).abs() < 1e-9);

        let (n_variants, rows) = (r.gen_range(1..=4), r.gen_range(0..=6));
        let (variants, dets) = synthetic_image(&mut r, n_variants, rows);
        let q: Vec<Quad> = dets.iter().map(|d| d.quad).collect();
        let tau = r.gen_range(0.05..0.95);
        for v in &variants {
            let m = match_image(&q, &v.instances, tau).unwrap();
            let mut det_seen = vec![0; q.len()];
            let mut gt_seen = vec![0; v.instances.len()];
            for p in &m.pairs {
                det_seen[p.det] += 1;
                gt_seen[p.gt] += 1;
            }
            m.unmatched_detections.iter().chain(&m.ignored_detections).for_each(|&d| det_seen[d] += 1);
            m.unmatched_gts.iter().chain(&m.ignored_gts).for_each(|&g| gt_seen[g] += 1);
            let one_to_one = det_seen.iter().chain(&gt_seen).all(|&c| c == 1)
                && m.pairs.iter().all(|p| p.iou > tau && !v.instances[p.gt].ignore);
            check("one-to-one matching", seed, one_to_one);
        }
        let (vi, _) = select_variant(&q, &variants).unwrap();
        let gts = &variants[vi].instances;
        let matrix = IouMatrix::compute(&q, gts).unwrap();
        check(
            "threshold monotonicity",
            seed,
            matrix.assign(q.len(), gts, 0.7).counts().tp <= matrix.assign(q.len(), gts, 0.5).counts().tp,
        );

        let (s, t) = (text_case(&mut r), text_case(&mut r));
        let once = normalize(&s);
        check("normalize idempotence", seed, normalize(&once) == once);
        let d = norm_edit_distance(&s, &t);
        check("NED range", seed, (0.0..=1.0).contains(&d));
        check("NED folding invariance", seed, d == norm_edit_distance(&once, &normalize(&t)));

        let (gt, pred) = image_corpus(&mut r);
        let r3 = eval_task3(&gt, &pred, &[0.5, 0.7], &opts).unwrap();
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        check(
            "task3 scores in [0,1]",
            seed,
            r3.thresholds.iter().all(|t| in_unit(t.precision) && in_unit(t.recall) && in_unit(t.f_score)),
        );
        check("task4 score in [0,1]", seed, in_unit(eval_task4(&gt, &pred, &opts).unwrap().score));
        let n = r.gen_range(1..20);
        let labels: LabelSet = (0..n).map(|k| (format!("{k}"), text_case(&mut r))).collect();
        let mut guesses = LabelSet::new();
        for k in 0..n {
            if r.gen_bool(0.8) {
                guesses.insert(format!("{k}"), text_case(&mut r));
            }
        }
        check("task1 score in [0,1]", seed, in_unit(eval_task1(&labels, &guesses).unwrap().score));
        check("task2 score in [0,1]", seed, in_unit(eval_task2(&labels, &guesses).unwrap().score));
    }
    if failures.is_empty() {
        Ok(format!("{CASES} cases x 13 properties, 0 failures"))
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// 7

fn timed_run(args: &[&str]) -> Result<Duration, String> {
    let start = Instant::now();
    rre(args)?;
    Ok(start.elapsed())
}

fn determinism() -> Outcome {
    let (gt, pred) = synthetic_corpus(0x40_0000, 5000, 6);
    let per_image = pred.iter().map(|(_, d)| d.len()).sum::<usize>() as f64 / gt.len() as f64;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gt_path = dir.path().join("gt.json");
    let pred_path = dir.path().join("pred.tsv");
    std::fs::write(&gt_path, gt.to_json()).map_err(|e| e.to_string())?;
    std::fs::write(&pred_path, pred.to_tsv()).map_err(|e| e.to_string())?;
    let workers = std::thread::available_parallelism().map_or(4, usize::from).max(4).to_string();
    let p = |path: &Path| path.to_str().unwrap().to_owned();
    let mut serial = Duration::ZERO;
    for task in ["task3", "task4"] {
        let mut reports = Vec::new();
        for jobs in ["1", workers.as_str()] {
            let out = dir.path().join(format!("{task}_{jobs}.json"));
            let took = timed_run(&[
                task,
                "--gt",
                &p(&gt_path),
                "--pred",
                &p(&pred_path),
                "--jobs",
                jobs,
                "--report",
                &p(&out),
            ])?;
            if jobs == "1" {
                serial += took;
            }
            reports.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        if reports[0] != reports[1] {
            return Err(format!("{task} report differs between 1 and {workers} workers"));
        }
    }
    if serial >= Duration::from_secs(10) {
        return Err(format!("single-threaded task3 + task4 took {:.2}s", serial.as_secs_f64()));
    }
    Ok(format!(
        "5000 images, {per_image:.1} detections/image, reports identical at 1 and {workers} workers, serial {:.2}s",
        serial.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 8

fn merged_vs_split() -> Outcome {
    let words = ["砂锅", "炒面", "拌面", "烩肉", "泡馍"];
    let merged = vec![TextInstance::new(rect(0., 0., 500., 100.), words.concat(), false)];
    let split: Vec<TextInstance> = words
        .iter()
        .enumerate()
        .map(|(k, w)| TextInstance::new(rect(100. * k as f64, 0., 100. * (k + 1) as f64, 100.), *w, false))
        .collect();
    let mut gt = GroundTruth::new();
    gt.insert(
        "sign",
        vec![GroundTruthVariant::new(merged.clone()), GroundTruthVariant::new(split.clone())],
    )
    .unwrap();
    let opts = EvalOptions::default();
    let mut scores = Vec::new();
    for (name, boxes) in [("merged", &merged), ("split", &split)] {
        let mut pred = DetectionSubmission::new();
        for b in boxes {
            pred.push("sign", Detection::with_transcript(b.quad, b.transcription.clone()));
        }
        let r = eval_task3(&gt, &pred, &[0.5], &opts).map_err(|e| e.to_string())?;
        let f = r.ranking_f();
        if f != 1.0 {
            return Err(format!("{name} submission F = {f}"));
        }
        scores.push(format!("{name} F=1.0"));
        let e2e = eval_task4(&gt, &pred, &opts).map_err(|e| e.to_string())?.score;
        if e2e != 1.0 {
            return Err(format!("{name} submission end-to-end = {e2e}"));
        }
    }
    Ok(scores.join(", "))
}
