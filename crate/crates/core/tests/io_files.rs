use std::io::Write;

use proptest::prelude::*;
use rre_core::{
    parse_detection_submission, parse_ground_truth, parse_label_submission, ParseError, Severity,
};
use rre_testkit::synthetic_corpus;

fn file(contents: &[u8]) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents).unwrap();
    f
}

#[test]
fn ground_truth_file_round_trip() {
    let (gt, _) = synthetic_corpus(3, 40, 5);
    let f = file(gt.to_json().as_bytes());
    let back = parse_ground_truth(f.path()).unwrap();
    assert_eq!(back.value, gt);
}

#[test]
fn detection_file_round_trip() {
    let (_, pred) = synthetic_corpus(4, 40, 5);
    let f = file(pred.to_tsv().as_bytes());
    let back = parse_detection_submission(f.path(), true).unwrap();
    assert_eq!(back.value, pred);
}

#[test]
fn bom_and_crlf_are_accepted() {
    let f = file("\u{FEFF}a\tHello\r\n\r\nb\t砂锅\r\n".as_bytes());
    let labels = parse_label_submission(f.path()).unwrap();
    assert_eq!(labels.get("a"), Some("Hello"));
    assert_eq!(labels.get("b"), Some("砂锅"));
    assert_eq!(labels.len(), 2);
}

#[test]
fn invalid_utf8_names_the_line() {
    let f = file(b"a\tok\nb\t\xff\xfe\n");
    match parse_label_submission(f.path()) {
        Err(ParseError::Format { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = parse_ground_truth(dir.path().join("absent.json")).unwrap_err();
    assert!(matches!(err, ParseError::Io { .. }));
}

#[test]
fn seven_coordinates_fail_on_their_line() {
    let f = file(b"img\t0,0,10,0,10,10,0,10\nimg\t0,0,10,0,10,10,0\n");
    let err = parse_detection_submission(f.path(), false).unwrap_err();
    assert_eq!(err.line(), Some(2));
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn counter_clockwise_prediction_warns_but_loads() {
    let f = file(b"img\t0,0,0,10,10,10,10,0\n");
    let p = parse_detection_submission(f.path(), false).unwrap();
    assert_eq!(p.value.get("img").len(), 1);
    assert_eq!(p.warnings.len(), 1);
    assert_eq!(p.warnings[0].severity, Severity::Warning);
    assert_eq!(p.warnings[0].line, Some(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ground_truth_json_round_trips(seed in any::<u64>(), n in 1usize..8) {
        let (gt, _) = synthetic_corpus(seed, n, 4);
        let f = file(gt.to_json().as_bytes());
        prop_assert_eq!(parse_ground_truth(f.path()).unwrap().value, gt);
    }

    #[test]
    fn detection_tsv_round_trips(seed in any::<u64>(), n in 1usize..8) {
        let (_, pred) = synthetic_corpus(seed, n, 4);
        let f = file(pred.to_tsv().as_bytes());
        prop_assert_eq!(parse_detection_submission(f.path(), true).unwrap().value, pred);
    }
}
