//! Ground-truth and submission file formats.
//!
//! Ground truth for the detection tasks is a JSON array of images:
//!
//! ```json
//! [{"image_id": "img_001",
//!   "variants": [{"lines": [{"points": [0,0,10,0,10,5,0,5],
//!                            "transcription": "砂锅",
//!                            "ignore": false}]}]}]
//! ```
//!
//! Submissions are TAB-separated text, one record per line. Label files
//! (also used as ground truth for the recognition tasks) hold
//! `id<TAB>transcript`; detection files hold
//! `id<TAB>x1,y1,x2,y2,x3,y3,x4,y4[<TAB>transcript]`. A transcript always
//! consumes the rest of the line, so it may contain commas or tabs.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::ParseError;
use crate::geometry::{Quad, Winding};

/// One annotated text line or character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextInstance {
    #[serde(rename = "points")]
    pub quad: Quad,
    pub transcription: String,
    pub ignore: bool,
}

impl TextInstance {
    pub fn new(quad: Quad, transcription: impl Into<String>, ignore: bool) -> Self {
        Self {
            quad,
            transcription: transcription.into(),
            ignore,
        }
    }
}

/// One complete, equally valid annotation of an image.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruthVariant {
    #[serde(rename = "lines")]
    pub instances: Vec<TextInstance>,
}

impl GroundTruthVariant {
    pub fn new(instances: Vec<TextInstance>) -> Self {
        Self { instances }
    }
}

/// Per-image annotation variants, keyed by image id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    entries: BTreeMap<String, Vec<GroundTruthVariant>>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an image. Fails if the id is already present or `variants` is
    /// empty.
    pub fn insert(
        &mut self,
        image_id: impl Into<String>,
        variants: Vec<GroundTruthVariant>,
    ) -> Result<(), String> {
        let id = image_id.into();
        if variants.is_empty() {
            return Err(format!("image {id:?} has no ground-truth variants"));
        }
        if self.entries.contains_key(&id) {
            return Err(format!("duplicate image id {id:?}"));
        }
        self.entries.insert(id, variants);
        Ok(())
    }

    pub fn get(&self, image_id: &str) -> Option<&[GroundTruthVariant]> {
        self.entries.get(image_id).map(Vec::as_slice)
    }

    /// Images in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[GroundTruthVariant])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> String {
        let images: Vec<ImageOut<'_>> = self
            .entries
            .iter()
            .map(|(id, variants)| ImageOut {
                image_id: id,
                variants,
            })
            .collect();
        serde_json::to_string_pretty(&images).expect("ground truth serializes")
    }
}

#[derive(Serialize)]
struct ImageOut<'a> {
    image_id: &'a str,
    variants: &'a [GroundTruthVariant],
}

/// Id-to-transcript records: recognition submissions, and the ground truth
/// for the recognition tasks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelSet {
    records: BTreeMap<String, String>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `false` (and keeps the old record) if the id already exists.
    pub fn insert(&mut self, image_id: impl Into<String>, text: impl Into<String>) -> bool {
        use std::collections::btree_map::Entry;
        match self.records.entry(image_id.into()) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(text.into());
                true
            }
        }
    }

    pub fn get(&self, image_id: &str) -> Option<&str> {
        self.records.get(image_id).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.records.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut set = LabelSet::new();
        for (k, v) in iter {
            set.insert(k, v);
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub quad: Quad,
    pub transcript: Option<String>,
}

impl Detection {
    pub fn new(quad: Quad) -> Self {
        Self {
            quad,
            transcript: None,
        }
    }

    pub fn with_transcript(quad: Quad, transcript: impl Into<String>) -> Self {
        Self {
            quad,
            transcript: Some(transcript.into()),
        }
    }
}

/// Predicted regions per image, each list in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionSubmission {
    records: BTreeMap<String, Vec<Detection>>,
}

impl DetectionSubmission {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, image_id: impl Into<String>, det: Detection) {
        self.records.entry(image_id.into()).or_default().push(det);
    }

    /// Detections for an image; empty when the image is absent.
    pub fn get(&self, image_id: &str) -> &[Detection] {
        self.records.get(image_id).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Detection])> {
        self.records.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, dets) in &self.records {
            for d in dets {
                out.push_str(id);
                out.push('\t');
                out.push_str(&d.quad.to_string());
                if let Some(t) = &d.transcript {
                    out.push('\t');
                    out.push_str(t);
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// A non-fatal finding (or, in validation mode, a collected error).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            line,
            message: message.into(),
        }
    }

    pub fn error(line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.line {
            Some(l) => write!(f, "{sev}: line {l}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// A parsed value plus the warnings raised while reading it.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<Diagnostic>,
}

fn read_text(path: &Path) -> Result<String, ParseError> {
    let bytes = std::fs::read(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let line = 1 + e.as_bytes()[..e.utf8_error().valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        ParseError::format(path, line, "file is not valid UTF-8")
    })?;
    Ok(match text.strip_prefix('\u{FEFF}') {
        Some(rest) => rest.to_owned(),
        None => text,
    })
}

/// Lines with their 1-based numbers, CR stripped, blank lines dropped.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

// ---------------------------------------------------------------------------
// Ground truth

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    points: Coords,
    transcription: String,
    #[serde(default)]
    ignore: bool,
}

struct Coords(Vec<f64>);

impl<'de> Deserialize<'de> for Coords {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() != 8 {
            return Err(de::Error::invalid_length(
                v.len(),
                &"8 coordinates (4 vertices)",
            ));
        }
        Ok(Coords(v))
    }
}

#[derive(Deserialize)]
#[serde(try_from = "RawLine")]
struct CheckedLine(TextInstance);

impl TryFrom<RawLine> for CheckedLine {
    type Error = String;

    fn try_from(raw: RawLine) -> Result<Self, String> {
        let quad = Quad::from_slice(&raw.points.0).map_err(|e| e.to_string())?;
        if !quad.is_simple() {
            return Err(format!("self-intersecting quad {quad}"));
        }
        if quad.area() == 0.0 {
            return Err(format!("degenerate quad {quad} has zero area"));
        }
        if raw.transcription.contains(['\n', '\r']) {
            return Err("transcription contains a line break".into());
        }
        Ok(CheckedLine(TextInstance::new(
            quad,
            raw.transcription,
            raw.ignore,
        )))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    lines: Vec<CheckedLine>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImage {
    image_id: String,
    variants: Vec<RawVariant>,
}

/// Image list that rejects duplicate ids and empty variant lists while
/// the deserializer still knows the position.
struct ImageList(Vec<RawImage>);

impl<'de> Deserialize<'de> for ImageList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ImageList;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of images")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<ImageList, A::Error> {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                while let Some(img) = seq.next_element::<RawImage>()? {
                    if img.variants.is_empty() {
                        return Err(de::Error::custom(format!(
                            "image {:?} has no variants",
                            img.image_id
                        )));
                    }
                    if !seen.insert(img.image_id.clone()) {
                        return Err(de::Error::custom(format!(
                            "duplicate image id {:?}",
                            img.image_id
                        )));
                    }
                    out.push(img);
                }
                Ok(ImageList(out))
            }
        }
        d.deserialize_seq(V)
    }
}

/// serde_json appends " at line L column C"; the location is reported
/// separately.
pub(crate) fn json_message(e: &serde_json::Error) -> String {
    let s = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    s.strip_suffix(&suffix).unwrap_or(&s).to_owned()
}

/// Parses ground truth from JSON text. `origin` only labels errors.
pub fn ground_truth_from_str(text: &str, origin: &Path) -> Result<Parsed<GroundTruth>, ParseError> {
    let list: ImageList = serde_json::from_str(text)
        .map_err(|e| ParseError::format(origin, e.line().max(1), json_message(&e)))?;
    let mut gt = GroundTruth::new();
    let mut warnings = Vec::new();
    for img in list.0 {
        let variants: Vec<GroundTruthVariant> = img
            .variants
            .into_iter()
            .map(|v| GroundTruthVariant::new(v.lines.into_iter().map(|l| l.0).collect()))
            .collect();
        for (vi, v) in variants.iter().enumerate() {
            for (li, inst) in v.instances.iter().enumerate() {
                if inst.quad.winding() == Winding::CounterClockwise {
                    warnings.push(Diagnostic::warning(
                        None,
                        format!(
                            "image {:?} variant {vi} line {li}: vertices are counter-clockwise",
                            img.image_id
                        ),
                    ));
                }
            }
        }
        gt.insert(img.image_id, variants)
            .expect("ids and variants checked during deserialization");
    }
    Ok(Parsed {
        value: gt,
        warnings,
    })
}

pub fn parse_ground_truth(path: impl AsRef<Path>) -> Result<Parsed<GroundTruth>, ParseError> {
    let path = path.as_ref();
    ground_truth_from_str(&read_text(path)?, path)
}

// ---------------------------------------------------------------------------
// Label files

pub fn labels_from_str(text: &str, origin: &Path) -> Result<LabelSet, ParseError> {
    let mut set = LabelSet::new();
    for (n, line) in records(text) {
        let (id, transcript) = line
            .split_once('\t')
            .ok_or_else(|| ParseError::format(origin, n, "expected `id<TAB>transcript`"))?;
        if id.is_empty() {
            return Err(ParseError::format(origin, n, "empty image id"));
        }
        if !set.insert(id, transcript) {
            return Err(ParseError::format(
                origin,
                n,
                format!("duplicate image id {id:?}"),
            ));
        }
    }
    Ok(set)
}

/// Parses an `id<TAB>transcript` file (recognition submission or ground
/// truth).
pub fn parse_label_submission(path: impl AsRef<Path>) -> Result<LabelSet, ParseError> {
    let path = path.as_ref();
    labels_from_str(&read_text(path)?, path)
}

// ---------------------------------------------------------------------------
// Detection files

fn parse_coords(field: &str, origin: &Path, n: usize) -> Result<Quad, ParseError> {
    let parts: Vec<&str> = field.split(',').collect();
    if parts.len() != 8 {
        return Err(ParseError::format(
            origin,
            n,
            format!("expected 8 coordinates, got {}", parts.len()),
        ));
    }
    let mut c = [0.0; 8];
    for (slot, raw) in c.iter_mut().zip(&parts) {
        let raw = raw.trim();
        let v: f64 = raw
            .parse()
            .map_err(|_| ParseError::format(origin, n, format!("non-numeric coordinate {raw:?}")))?;
        if !v.is_finite() {
            return Err(ParseError::format(
                origin,
                n,
                format!("non-finite coordinate {raw:?}"),
            ));
        }
        *slot = v;
    }
    Ok(Quad::from_coords(c).expect("coordinates are finite"))
}

pub fn detections_from_str(
    text: &str,
    origin: &Path,
    with_transcripts: bool,
) -> Result<Parsed<DetectionSubmission>, ParseError> {
    let mut sub = DetectionSubmission::new();
    let mut warnings = Vec::new();
    for (n, line) in records(text) {
        let (id, rest) = line.split_once('\t').ok_or_else(|| {
            ParseError::format(origin, n, "expected `id<TAB>x1,y1,...,x4,y4`")
        })?;
        if id.is_empty() {
            return Err(ParseError::format(origin, n, "empty image id"));
        }
        let (coords, transcript) = match rest.split_once('\t') {
            Some((c, t)) => (c, Some(t)),
            None => (rest, None),
        };
        let transcript = match (with_transcripts, transcript) {
            (true, None) => {
                return Err(ParseError::format(
                    origin,
                    n,
                    "expected 3 TAB-separated fields (id, coordinates, transcript), got 2",
                ))
            }
            (false, Some(_)) => {
                warnings.push(Diagnostic::warning(
                    Some(n),
                    "transcript field ignored for detection-only scoring",
                ));
                None
            }
            (_, t) => t.map(str::to_owned),
        };
        let quad = parse_coords(coords, origin, n)?;
        match quad.winding() {
            Winding::CounterClockwise => warnings.push(Diagnostic::warning(
                Some(n),
                format!("image {id:?}: vertices are counter-clockwise"),
            )),
            Winding::Degenerate => warnings.push(Diagnostic::warning(
                Some(n),
                format!("image {id:?}: zero-area quad can never match"),
            )),
            Winding::Clockwise => {}
        }
        if !quad.is_simple() {
            warnings.push(Diagnostic::warning(
                Some(n),
                format!("image {id:?}: self-intersecting quad can never match"),
            ));
        }
        sub.push(id, Detection { quad, transcript });
    }
    Ok(Parsed {
        value: sub,
        warnings,
    })
}

/// Parses a detection submission; `with_transcripts` selects the
/// end-to-end layout.
pub fn parse_detection_submission(
    path: impl AsRef<Path>,
    with_transcripts: bool,
) -> Result<Parsed<DetectionSubmission>, ParseError> {
    let path = path.as_ref();
    detections_from_str(&read_text(path)?, path, with_transcripts)
}

/// Warnings for ground-truth images without predictions (scored as misses)
/// and for predictions on images the ground truth does not know (ignored).
pub fn coverage_warnings<'a>(
    gt_ids: impl IntoIterator<Item = &'a str>,
    pred_ids: impl IntoIterator<Item = &'a str>,
) -> Vec<Diagnostic> {
    let gt: BTreeSet<&str> = gt_ids.into_iter().collect();
    let pred: BTreeSet<&str> = pred_ids.into_iter().collect();
    let mut out = Vec::new();
    let missing: Vec<&str> = gt.difference(&pred).copied().collect();
    if !missing.is_empty() {
        out.push(Diagnostic::warning(
            None,
            format!(
                "{} ground-truth image(s) have no predictions and score as misses: {}",
                missing.len(),
                list_ids(&missing)
            ),
        ));
    }
    let unknown: Vec<&str> = pred.difference(&gt).copied().collect();
    if !unknown.is_empty() {
        out.push(Diagnostic::warning(
            None,
            format!(
                "{} predicted image id(s) are not in the ground truth and are ignored: {}",
                unknown.len(),
                list_ids(&unknown)
            ),
        ));
    }
    out
}

fn list_ids(ids: &[&str]) -> String {
    const SHOWN: usize = 20;
    let mut s = ids
        .iter()
        .take(SHOWN)
        .copied()
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        s.push_str(&format!(", ... ({} more)", ids.len() - SHOWN));
    }
    s
}
