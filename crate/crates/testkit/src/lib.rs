//! Test oracles and fixture generators.
//!
//! The oracles here work on raw coordinates and strings and share no code
//! with the library paths they check.

use rand::seq::SliceRandom;

use rand_chacha::ChaCha8Rng;

use rre_core::{
    Detection, DetectionSubmission, GroundTruth, GroundTruthVariant, Quad, TextInstance,
};

pub use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Geometry oracle

/// Even-odd ray crossing test on a raw polygon.
pub fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn pts(c: [f64; 8]) -> [(f64, f64); 4] {
    [(c[0], c[1]), (c[2], c[3]), (c[4], c[5]), (c[6], c[7])]
}

/// Monte Carlo estimate of (|A|, |B|, |A ∩ B|) from `grid * grid`
/// jittered-stratified uniform samples over the joint bounding box.
pub fn monte_carlo_areas(a: [f64; 8], b: [f64; 8], grid: usize, rng: &mut impl Rng) -> (f64, f64, f64) {
    let (pa, pb) = (pts(a), pts(b));
    let all = pa.iter().chain(pb.iter());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let (w, h) = ((x1 - x0) / grid as f64, (y1 - y0) / grid as f64);
    let (mut na, mut nb, mut nab) = (0u64, 0u64, 0u64);
    for i in 0..grid {
        for j in 0..grid {
            let x = x0 + (i as f64 + rng.gen::<f64>()) * w;
            let y = y0 + (j as f64 + rng.gen::<f64>()) * h;
            let ia = point_in_polygon(&pa, x, y);
            let ib = point_in_polygon(&pb, x, y);
            na += u64::from(ia);
            nb += u64::from(ib);
            nab += u64::from(ia && ib);
        }
    }
    let cell = w * h;
    (na as f64 * cell, nb as f64 * cell, nab as f64 * cell)
}

/// Monte Carlo IoU over `grid * grid` samples.
pub fn monte_carlo_iou(a: [f64; 8], b: [f64; 8], grid: usize, rng: &mut impl Rng) -> f64 {
    let (na, nb, nab) = monte_carlo_areas(a, b, grid, rng);
    let union = na + nb - nab;
    if union == 0.0 {
        0.0
    } else {
        nab / union
    }
}

// ---------------------------------------------------------------------------
// Edit distance oracle

/// The textbook recursive definition over code points, no memo: equal
/// heads recurse on the tails, otherwise 1 + min of the three edits.
pub fn levenshtein_brute(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((ca, ra)), Some((cb, rb))) if ca == cb => levenshtein_brute(ra, rb),
        (Some((_, ra)), Some((_, rb))) => {
            1 + levenshtein_brute(ra, rb)
                .min(levenshtein_brute(ra, b))
                .min(levenshtein_brute(a, rb))
        }
    }
}

/// Three-way recursion with no shortcut for equal heads.
pub fn levenshtein_three_way(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((ca, ra)), Some((cb, rb))) => {
            let sub = levenshtein_three_way(ra, rb) + usize::from(ca != cb);
            let del = levenshtein_three_way(ra, b) + 1;
            let ins = levenshtein_three_way(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Every string of length `0..=max_len` over `alphabet`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<Vec<char>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
        for s in &frontier {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Random shapes

/// Random convex quad inscribed in an ellipse with the given center and
/// radii, wound clockwise in image coordinates.
pub fn convex_quad_at(rng: &mut impl Rng, cx: f64, cy: f64, rx: f64, ry: f64) -> [f64; 8] {
    use std::f64::consts::TAU;
    loop {
        let mut angles: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * TAU).collect();
        angles.sort_by(f64::total_cmp);
        let min_gap = (0..4)
            .map(|i| {
                let next = if i == 3 { angles[0] + TAU } else { angles[i + 1] };
                next - angles[i]
            })
            .fold(f64::MAX, f64::min);
        if min_gap < 0.15 {
            continue;
        }
        let mut c = [0.0; 8];
        for (k, t) in angles.iter().enumerate() {
            c[2 * k] = cx + rx * t.cos();
            c[2 * k + 1] = cy + ry * t.sin();
        }
        return c;
    }
}

/// Random convex quad inside `[0, 100]^2`.
pub fn convex_quad(rng: &mut impl Rng) -> [f64; 8] {
    let rx = rng.gen_range(3.0..30.0);
    let ry = rng.gen_range(3.0..30.0);
    let cx = rng.gen_range(rx..100.0 - rx);
    let cy = rng.gen_range(ry..100.0 - ry);
    convex_quad_at(rng, cx, cy, rx, ry)
}

/// Pair of convex quads in `[0, 100]^2`; half the time the second is a
/// perturbed copy of the first so that overlaps cover the whole IoU range.
pub fn convex_pair(rng: &mut impl Rng) -> ([f64; 8], [f64; 8]) {
    let a = convex_quad(rng);
    if rng.gen_bool(0.5) {
        return (a, convex_quad(rng));
    }
    let s = rng.gen_range(2.0..20.0);
    let mut b = a;
    for v in b.iter_mut() {
        *v = (*v + rng.gen_range(-s..s) * 0.5).clamp(0.0, 100.0);
    }
    // perturbing vertices can break convexity; fall back to a shifted copy
    if !Quad::from_coords(b).unwrap().is_convex() || !Quad::from_coords(b).unwrap().is_simple() {
        let xs = || (0..4).map(|k| a[2 * k]);
        let ys = || (0..4).map(|k| a[2 * k + 1]);
        let lo = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::MAX, f64::min);
        let hi = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::MIN, f64::max);
        let dx = rng
            .gen_range(-s..s)
            .clamp(-lo(&mut xs()), 100.0 - hi(&mut xs()));
        let dy = rng
            .gen_range(-s..s)
            .clamp(-lo(&mut ys()), 100.0 - hi(&mut ys()));
        for k in 0..4 {
            b[2 * k] = a[2 * k] + dx;
            b[2 * k + 1] = a[2 * k + 1] + dy;
        }
    }
    (a, b)
}

/// Simple quad that is non-convex half of the time: one vertex is pulled
/// inside the triangle of the other three.
pub fn simple_quad(rng: &mut impl Rng) -> [f64; 8] {
    let mut c = convex_quad(rng);
    if rng.gen_bool(0.5) {
        let k = rng.gen_range(0..4);
        let others: Vec<(f64, f64)> = (1..4)
            .map(|d| {
                let i = (k + d) % 4;
                (c[2 * i], c[2 * i + 1])
            })
            .collect();
        // random point strictly inside the triangle of the other vertices,
        // pulled towards its centroid to stay clear of the edges
        let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
        if u + v > 1.0 {
            (u, v) = (1.0 - u, 1.0 - v);
        }
        let third = 1.0 / 3.0;
        let (u, v) = (third + 0.9 * (u - third), third + 0.9 * (v - third));
        let w = 1.0 - u - v;
        c[2 * k] = u * others[0].0 + v * others[1].0 + w * others[2].0;
        c[2 * k + 1] = u * others[0].1 + v * others[1].1 + w * others[2].1;
    }
    c
}

pub fn quad(c: [f64; 8]) -> Quad {
    Quad::from_coords(c).expect("finite coordinates")
}

// ---------------------------------------------------------------------------
// Synthetic corpora

const GLYPHS: &[char] = &[
    '砂', '锅', '炒', '面', '拌', '烩', '肉', '泡', '馍', '牛', 'A', 'b', '1', '２',
];

pub fn random_text(rng: &mut impl Rng, len: usize) -> String {
    (0..len).map(|_| *GLYPHS.choose(rng).unwrap()).collect()
}

/// Applies up to two random substitutions, deletions or insertions.
pub fn corrupt(rng: &mut impl Rng, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    for _ in 0..rng.gen_range(0..3) {
        match rng.gen_range(0..4) {
            0 if !chars.is_empty() => {
                let i = rng.gen_range(0..chars.len());
                chars[i] = *GLYPHS.choose(rng).unwrap();
            }
            1 if !chars.is_empty() => {
                chars.remove(rng.gen_range(0..chars.len()));
            }
            2 => chars.insert(rng.gen_range(0..=chars.len()), *GLYPHS.choose(rng).unwrap()),
            _ => {}
        }
    }
    chars.into_iter().collect()
}

fn jitter(rng: &mut impl Rng, q: [f64; 8], amount: f64) -> [f64; 8] {
    let mut out = q;
    for v in out.iter_mut() {
        *v += rng.gen_range(-amount..=amount);
    }
    out
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> [f64; 8] {
    [x0, y0, x1, y0, x1, y1, x0, y1]
}

/// A synthetic image: `rows` text rows, each split into words. Variant 0
/// annotates each row as one line; further variants split some rows into
/// words (the merged-vs-split ambiguity). Detections jitter boxes from a
/// random variant, drop some and add spurious boxes.
pub fn synthetic_image(
    rng: &mut impl Rng,
    n_variants: usize,
    rows: usize,
) -> (Vec<GroundTruthVariant>, Vec<Detection>) {
    struct Word {
        q: [f64; 8],
        text: String,
    }
    let mut layout: Vec<Vec<Word>> = Vec::new();
    for r in 0..rows {
        let y0 = 20.0 + r as f64 * 60.0 + rng.gen_range(0.0..10.0);
        let h = rng.gen_range(20.0..40.0);
        let mut x = rng.gen_range(10.0..60.0);
        let n_words = rng.gen_range(1..=4);
        let mut words = Vec::new();
        for _ in 0..n_words {
            let len = rng.gen_range(1..=4);
            let w = 25.0 * len as f64;
            words.push(Word {
                q: rect(x, y0, x + w, y0 + h),
                text: random_text(rng, len),
            });
            x += w + rng.gen_range(0.0..8.0);
        }
        layout.push(words);
    }
    let ignored: Vec<bool> = (0..rows).map(|_| rng.gen_bool(0.1)).collect();
    let mut variants = Vec::with_capacity(n_variants);
    for v in 0..n_variants {
        let mut instances = Vec::new();
        for (r, words) in layout.iter().enumerate() {
            let split = v > 0 && (rng.gen_bool(0.6) || v == 1);
            if split || words.len() == 1 {
                for w in words {
                    instances.push(TextInstance::new(quad(w.q), w.text.clone(), ignored[r]));
                }
            } else {
                let first = &words[0].q;
                let last = &words[words.len() - 1].q;
                let text: String = words.iter().map(|w| w.text.as_str()).collect();
                instances.push(TextInstance::new(
                    quad(rect(first[0], first[1], last[2], last[5])),
                    text,
                    ignored[r],
                ));
            }
        }
        variants.push(GroundTruthVariant::new(instances));
    }
    let source = &variants[rng.gen_range(0..n_variants)];
    let mut dets = Vec::new();
    for inst in &source.instances {
        if rng.gen_bool(0.15) {
            continue;
        }
        let amount = rng.gen_range(0.0..12.0);
        let q = jitter(rng, inst.quad.coords(), amount);
        dets.push(Detection::with_transcript(quad(q), corrupt(rng, &inst.transcription)));
        if rng.gen_bool(0.05) {
            let q = jitter(rng, inst.quad.coords(), 4.0);
            dets.push(Detection::with_transcript(quad(q), inst.transcription.clone()));
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        let x = rng.gen_range(0.0..900.0);
        let y = rng.gen_range(0.0..900.0);
        let q = rect(x, y, x + rng.gen_range(10.0..100.0), y + rng.gen_range(10.0..40.0));
        let len = rng.gen_range(1..4);
        dets.push(Detection::with_transcript(quad(q), random_text(rng, len)));
    }
    dets.shuffle(rng);
    (variants, dets)
}

/// A corpus of `n_images` synthetic images with 1-3 variants each.
pub fn synthetic_corpus(seed: u64, n_images: usize, rows: usize) -> (GroundTruth, DetectionSubmission) {
    let mut rng = rng(seed);
    let mut gt = GroundTruth::new();
    let mut pred = DetectionSubmission::new();
    for i in 0..n_images {
        let id = format!("img_{i:05}");
        let n_variants = rng.gen_range(1..=3);
        let (variants, dets) = synthetic_image(&mut rng, n_variants, rows);
        for d in dets {
            pred.push(id.clone(), d);
        }
        gt.insert(id, variants).expect("unique ids");
    }
    (gt, pred)
}
