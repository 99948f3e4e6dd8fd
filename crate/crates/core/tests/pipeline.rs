use std::path::Path;
use std::process::Command;

use kadt::baselines::TeacherKind;
use kadt::harness::{emit_reports, reaggregate, run_experiment, ExperimentConfig, Summary};
use kadt::student::StudentKind;

fn tiny(teacher: TeacherKind) -> ExperimentConfig {
    ExperimentConfig {
        episodes: 2,
        steps: 4,
        seeds: vec![3, 5],
        teacher,
        ..ExperimentConfig::default()
    }
}

fn kadt_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kadt"))
}

fn train(out: &Path, extra: &[&str]) {
    let status = kadt_bin()
        .args(["train", "--seed", "7", "--episodes", "2", "--steps", "5", "--out"])
        .arg(out)
        .args(extra)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn cli_train_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train(&a, &[]);
    train(&b, &[]);
    for name in ["metrics_7.csv", "heatmap_7.csv", "summary.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn cli_report_rebuilds_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    train(&out, &["--teacher", "l2t"]);
    let before = std::fs::read(out.join("summary.json")).unwrap();
    std::fs::remove_file(out.join("summary.json")).unwrap();
    assert!(kadt_bin()
        .arg("report")
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert_eq!(before, std::fs::read(out.join("summary.json")).unwrap());
}

#[test]
fn cli_rejects_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let bad = kadt_bin()
        .args(["train", "--teacher", "oracle", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("oracle"));
    let bad = kadt_bin().args(["train", "--preset", "huge"]).output().unwrap();
    assert!(!bad.status.success());
}

#[test]
fn reaggregation_matches_direct_summary() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&tiny(TeacherKind::Kadt)).unwrap();
    let direct = emit_reports(&run, dir.path()).unwrap();
    assert_eq!(reaggregate(dir.path()).unwrap(), direct);
    let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let parsed: Summary = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, direct);
}

#[test]
fn every_teacher_completes_both_phases() {
    for kind in TeacherKind::ALL {
        let run = run_experiment(&tiny(kind)).unwrap();
        assert_eq!(run.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![3, 5]);
        for r in &run.runs {
            assert_eq!(r.log.phase_episodes(2).count(), 2, "{kind}");
            let learned = kind.stack().is_some();
            assert_eq!(r.checksum_phase1.is_some(), learned);
            assert_eq!(r.checksum_phase1, r.checksum_phase2, "{kind}");
            assert_eq!(r.spl_threshold.is_some(), kind == TeacherKind::Spl);
            for s in &r.log.steps {
                assert!((s.action.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                assert_eq!(s.class_counts.iter().sum::<usize>(), 16);
            }
        }
    }
}

#[test]
fn switching_student_kind_keeps_teacher_frozen() {
    for (p1, p2) in [
        (StudentKind::Logistic, StudentKind::Mlp),
        (StudentKind::Mlp, StudentKind::Logistic),
    ] {
        let cfg = ExperimentConfig {
            phase1_student: p1,
            phase2_student: p2,
            ..tiny(TeacherKind::Kadt)
        };
        for r in run_experiment(&cfg).unwrap().runs {
            assert_eq!(r.checksum_phase1, r.checksum_phase2);
            assert!(r.log.mean_test_accuracy(2).is_some());
        }
    }
}

#[test]
fn one_step_run_logs_one_step_per_phase() {
    let cfg = ExperimentConfig {
        episodes: 1,
        steps: 1,
        seeds: vec![0],
        ..ExperimentConfig::default()
    };
    let run = run_experiment(&cfg).unwrap();
    let log = &run.runs[0].log;
    assert_eq!(log.steps.iter().filter(|s| s.phase == 1).count(), 1);
    assert_eq!(log.steps.iter().filter(|s| s.phase == 2).count(), 1);
}

#[test]
fn seeds_are_independent_of_the_seed_list() {
    let both = run_experiment(&tiny(TeacherKind::KadtKt)).unwrap();
    let alone = run_experiment(&ExperimentConfig {
        seeds: vec![5],
        ..tiny(TeacherKind::KadtKt)
    })
    .unwrap();
    assert_eq!(both.runs[1].log.steps, alone.runs[0].log.steps);
    assert_eq!(both.runs[1].checksum_phase2, alone.runs[0].checksum_phase2);
}
