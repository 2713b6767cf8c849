//! Transcript folding and edit-distance scoring.

/// Folds a transcript for comparison: full-width ASCII variants
/// (U+FF01..U+FF5E) and the ideographic space become their half-width forms,
/// then ASCII letters are lower-cased. Everything else passes through.
pub fn normalize(text: &str) -> String {
    text.chars().map(fold_char).collect()
}

fn fold_char(c: char) -> char {
    let c = match c {
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        '\u{3000}' => ' ',
        _ => c,
    };
    c.to_ascii_lowercase()
}

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

/// Two-row dynamic programme; `b` indexes the row.
pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance between the folded forms of `pred` and `gt`, divided by
/// the longer folded length. Two empty strings are at distance 0.
pub fn norm_edit_distance(pred: &str, gt: &str) -> f64 {
    let p: Vec<char> = normalize(pred).chars().collect();
    let g: Vec<char> = normalize(gt).chars().collect();
    let longest = p.len().max(g.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein_chars(&p, &g) as f64 / longest as f64
}
