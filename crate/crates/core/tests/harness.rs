//! Evaluation harness against independently computed expectations.

use tcc_core::bench::{evaluate_method, parse_method, run_benchmark, FoldSelection, RunConfig, TableFormat};
use tcc_core::dataset::{write_suite, DatasetManifest, Fold, SceneSpec, SuiteSpec};
use tcc_core::{angular_error, Illuminant};

fn suite(dir: &std::path::Path, scene: SceneSpec, count: usize) -> DatasetManifest {
    let spec = SuiteSpec { count, lengths: vec![2, 3], scene, seed: 13 };
    write_suite(&spec, dir).unwrap();
    DatasetManifest::load(dir.join("manifest.jsonl")).unwrap()
}

#[test]
fn oracle_is_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let m = suite(dir.path(), SceneSpec::default(), 10);
    let r = evaluate_method(&m, FoldSelection::All, parse_method("oracle").unwrap().as_ref(), 0).unwrap();
    assert_eq!(r.failures, 0);
    assert_eq!(r.log.len(), 10);
    assert!(r.stats.unwrap().as_array().iter().all(|&v| v == 0.0));
}

#[test]
fn fixed_method_matches_recomputed_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let m = suite(dir.path(), SceneSpec::default(), 9);
    let r = evaluate_method(&m, FoldSelection::All, parse_method("fixed --rgb 1,2,1").unwrap().as_ref(), 0).unwrap();
    let guess = Illuminant::new(1.0, 2.0, 1.0).unwrap();
    let mut errs: Vec<f64> = m.records.iter().map(|rec| angular_error(guess, rec.illuminant).unwrap().degrees()).collect();
    for (e, rec) in r.log.iter().zip(&m.records) {
        assert_eq!(e.id, rec.id);
    }
    errs.sort_by(f64::total_cmp);
    // n = 9: quartiles at sorted positions 2, 4 and 6; tails of 3 and 1.
    let mean = errs.iter().sum::<f64>() / 9.0;
    let trimean = (errs[2] + 2.0 * errs[4] + errs[6]) / 4.0;
    let best = (errs[0] + errs[1] + errs[2]) / 3.0;
    let worst = (errs[6] + errs[7] + errs[8]) / 3.0;
    let expected = [mean, errs[4], trimean, best, worst, errs[8]];
    let got = r.stats.unwrap().as_array();
    for (g, e) in got.iter().zip(expected) {
        assert!((g - e).abs() < 1e-9, "{got:?} vs {expected:?}");
    }
}

#[test]
fn gray_world_on_balanced_fold() {
    let dir = tempfile::tempdir().unwrap();
    let m = suite(dir.path(), SceneSpec::balanced(), 12);
    let split = tcc_core::dataset::fixed_split(&m, 0.5, 3).unwrap();
    split.save(dir.path().join("split.jsonl")).unwrap();
    let split = DatasetManifest::load(dir.path().join("split.jsonl")).unwrap();
    assert_eq!(split.fold(Fold::Test).count(), 6);
    let r = evaluate_method(&split, FoldSelection::Test, parse_method("gray-world").unwrap().as_ref(), 0).unwrap();
    assert_eq!(r.log.len(), 6);
    assert!(r.stats.unwrap().mean < 0.5);
}

#[test]
fn run_benchmark_writes_table_and_log() {
    let dir = tempfile::tempdir().unwrap();
    suite(dir.path(), SceneSpec::default(), 4);
    let mut config = RunConfig::new(dir.path().join("manifest.jsonl"), vec!["oracle".into(), "white-patch".into()]);
    config.format = TableFormat::Csv;
    config.table_path = Some(dir.path().join("out/table.csv"));
    config.log_path = Some(dir.path().join("out/log.csv"));
    let table = run_benchmark(&config).unwrap();
    assert_eq!(table.rows.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("out/table.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("Oracle,0.00,"));
    let log = std::fs::read_to_string(dir.path().join("out/log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 2 * 4);
}

#[test]
fn unknown_method_is_rejected_before_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    suite(dir.path(), SceneSpec::default(), 2);
    let config = RunConfig::new(dir.path().join("manifest.jsonl"), vec!["gray-world".into(), "bogus".into()]);
    assert!(run_benchmark(&config).is_err());
}
