use std::path::Path;

use kadt::harness::{load_csv, read_csv, run_experiment, to_csv_bytes, DatasetSource, ExperimentConfig};
use kadt::Error;

fn fixture() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/three_class.csv"))
}

#[test]
fn fixture_loads() {
    let data = load_csv(fixture()).unwrap();
    assert_eq!(data.len(), 30);
    assert_eq!(data.num_classes(), 3);
    assert_eq!(data.feature_dim(), 3);
    assert_eq!(data.class_counts(), vec![10, 10, 10]);
}

#[test]
fn written_csv_reloads_exactly() {
    let data = load_csv(fixture()).unwrap();
    let again = read_csv(to_csv_bytes(&data).unwrap().as_slice()).unwrap();
    assert_eq!(again.len(), data.len());
    for (a, b) in data.samples().iter().zip(again.samples()) {
        assert_eq!(a.features, b.features);
        assert_eq!(a.label, b.label);
    }
}

#[test]
fn malformed_inputs() {
    assert!(matches!(read_csv("".as_bytes()), Err(Error::CsvEmpty)));
    assert!(matches!(read_csv("x0,label\n".as_bytes()), Err(Error::CsvEmpty)));
    assert!(matches!(
        read_csv("x0,x1\n1,2\n".as_bytes()),
        Err(Error::CsvMissingLabel)
    ));
    match read_csv("x0,x1,label\n1,2,0\n1,abc,1\n".as_bytes()) {
        Err(Error::CsvNonNumericFeature { row, column }) => {
            assert_eq!(row, 2);
            assert_eq!(column, "x1");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        read_csv("x0,label\n1,0\n2,1.5\n".as_bytes()),
        Err(Error::CsvNonIntegerLabel { row: 2 })
    ));
    assert!(matches!(
        read_csv("x0,label\n1,0\n2,-1\n".as_bytes()),
        Err(Error::CsvNonIntegerLabel { row: 2 })
    ));
}

#[test]
fn csv_dataset_drives_a_short_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::copy(fixture(), dir.path().join("data.csv")).unwrap();
    std::fs::write(
        &cfg_path,
        "task = \"csv\"\nnum_concepts = 3\nbatch_size = 4\nepisodes = 2\nsteps = 3\nseeds = [0]\n\
         [dataset]\nkind = \"csv\"\npath = \"data.csv\"\n",
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    assert!(matches!(&cfg.dataset, DatasetSource::Csv { path } if path.is_absolute() || path.starts_with(dir.path())));
    let run = run_experiment(&cfg).unwrap();
    let log = &run.runs[0].log;
    assert_eq!(log.steps.len(), 2 * 2 * 3);
    assert_eq!(log.phase_episodes(2).count(), 2);
}
