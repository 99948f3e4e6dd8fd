use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::ExperimentRun;
use crate::agent::{EpisodeRecord, MetricsLog};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std, n })
    }
}

/// Per-seed facts that cannot be recovered from the curve files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub seed: u64,
    pub checksum_phase1: Option<String>,
    pub checksum_phase2: Option<String>,
    pub spl_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub task: String,
    pub teacher: String,
    pub phase1_student: String,
    pub phase2_student: String,
    pub episodes: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub seeds: Vec<SeedInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    /// Mean end-of-episode test accuracy over phase 2.
    pub mean_test_accuracy: f64,
    pub final_test_accuracy: f64,
    pub final_test_auc: Option<f64>,
    pub mean_valid_accuracy: f64,
    pub checksum_phase1: Option<String>,
    pub checksum_phase2: Option<String>,
    pub spl_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_test_accuracy: Stat,
    pub final_test_accuracy: Stat,
    pub final_test_auc: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task: String,
    pub teacher: String,
    pub phase1_student: String,
    pub phase2_student: String,
    pub episodes: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub seeds: Vec<SeedSummary>,
    pub aggregate: Aggregate,
}

fn hex(c: Option<u64>) -> Option<String> {
    c.map(|v| format!("{v:016x}"))
}

pub fn run_info(run: &ExperimentRun) -> RunInfo {
    let c = &run.config;
    RunInfo {
        task: c.task.clone(),
        teacher: c.teacher.to_string(),
        phase1_student: c.phase1_student.to_string(),
        phase2_student: c.phase2_student.to_string(),
        episodes: c.episodes,
        steps: c.steps,
        batch_size: c.batch_size,
        seeds: run
            .runs
            .iter()
            .map(|r| SeedInfo {
                seed: r.seed,
                checksum_phase1: hex(r.checksum_phase1),
                checksum_phase2: hex(r.checksum_phase2),
                spl_threshold: r.spl_threshold,
            })
            .collect(),
    }
}

/// Aggregates phase-2 episode records, one list per seed in `info` order.
pub fn summarize(info: &RunInfo, episodes: &[Vec<EpisodeRecord>]) -> Result<Summary> {
    if episodes.len() != info.seeds.len() {
        return Err(Error::invalid("one episode list per seed is required"));
    }
    let mut seeds = Vec::new();
    for (s, eps) in info.seeds.iter().zip(episodes) {
        let p2: Vec<&EpisodeRecord> = eps.iter().filter(|e| e.phase == 2).collect();
        let last = p2
            .last()
            .ok_or_else(|| Error::invalid(format!("seed {} has no phase-2 episodes", s.seed)))?;
        let n = p2.len() as f64;
        seeds.push(SeedSummary {
            seed: s.seed,
            mean_test_accuracy: p2.iter().map(|e| e.test_accuracy).sum::<f64>() / n,
            final_test_accuracy: last.test_accuracy,
            final_test_auc: last.test_auc,
            mean_valid_accuracy: p2.iter().map(|e| e.valid_accuracy).sum::<f64>() / n,
            checksum_phase1: s.checksum_phase1.clone(),
            checksum_phase2: s.checksum_phase2.clone(),
            spl_threshold: s.spl_threshold,
        });
    }
    let col = |f: &dyn Fn(&SeedSummary) -> f64| seeds.iter().map(f).collect::<Vec<_>>();
    let aucs: Option<Vec<f64>> = seeds.iter().map(|s| s.final_test_auc).collect();
    let aggregate = Aggregate {
        mean_test_accuracy: Stat::of(&col(&|s| s.mean_test_accuracy)).ok_or(Error::Empty("seeds"))?,
        final_test_accuracy: Stat::of(&col(&|s| s.final_test_accuracy)).ok_or(Error::Empty("seeds"))?,
        final_test_auc: aucs.as_deref().and_then(Stat::of),
    };
    Ok(Summary {
        task: info.task.clone(),
        teacher: info.teacher.clone(),
        phase1_student: info.phase1_student.clone(),
        phase2_student: info.phase2_student.clone(),
        episodes: info.episodes,
        steps: info.steps,
        batch_size: info.batch_size,
        seeds,
        aggregate,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

/// One row per teaching step.
pub fn metrics_csv(log: &MetricsLog) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "phase",
        "episode",
        "step",
        "reward",
        "performance",
        "train_loss",
        "kt_rmse",
        "critic_loss",
        "action",
        "class_counts",
    ])?;
    for s in &log.steps {
        w.write_record([
            s.phase.to_string(),
            s.episode.to_string(),
            s.step.to_string(),
            s.reward.to_string(),
            s.performance.to_string(),
            s.train_loss.to_string(),
            opt(s.kt_rmse),
            opt(s.critic_loss),
            join(&s.action),
            join(&s.class_counts),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

const CURVE_HEADER: [&str; 9] = [
    "phase",
    "episode",
    "cumulative_reward",
    "valid_accuracy",
    "valid_auc",
    "test_accuracy",
    "test_auc",
    "test_loss",
    "concept_accuracy",
];

/// One row per episode, phase 1 first.
pub fn curve_csv(log: &MetricsLog) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER)?;
    for e in &log.episodes {
        let concepts: Vec<String> = e.concept_accuracy.iter().map(|c| opt(*c)).collect();
        w.write_record([
            e.phase.to_string(),
            e.episode.to_string(),
            e.cumulative_reward.to_string(),
            e.valid_accuracy.to_string(),
            opt(e.valid_auc),
            e.test_accuracy.to_string(),
            opt(e.test_auc),
            e.test_loss.to_string(),
            concepts.join(";"),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::invalid(format!("curve file: bad {what} value {s:?}")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

pub fn parse_curve_csv(bytes: &[u8]) -> Result<Vec<EpisodeRecord>> {
    let mut r = csv::Reader::from_reader(bytes);
    if r.headers()?.iter().collect::<Vec<_>>() != CURVE_HEADER {
        return Err(Error::invalid("curve file: unexpected header"));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != CURVE_HEADER.len() {
            return Err(Error::invalid("curve file: short row"));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::invalid(format!("curve file: bad integer {s:?}")))
        };
        out.push(EpisodeRecord {
            phase: int(&rec[0])? as u8,
            episode: int(&rec[1])?,
            cumulative_reward: parse_f64(&rec[2], "cumulative_reward")?,
            valid_accuracy: parse_f64(&rec[3], "valid_accuracy")?,
            valid_auc: parse_opt(&rec[4], "valid_auc")?,
            test_accuracy: parse_f64(&rec[5], "test_accuracy")?,
            test_auc: parse_opt(&rec[6], "test_auc")?,
            test_loss: parse_f64(&rec[7], "test_loss")?,
            concept_accuracy: if rec[8].is_empty() {
                Vec::new()
            } else {
                rec[8]
                    .split(';')
                    .map(|c| parse_opt(c, "concept_accuracy"))
                    .collect::<Result<_>>()?
            },
        });
    }
    Ok(out)
}

/// Concepts x phase-2 episodes matrix of validation accuracy; blank where a
/// concept has no validation sample.
pub fn heatmap_csv(log: &MetricsLog) -> Result<Vec<u8>> {
    let eps: Vec<&EpisodeRecord> = log.phase_episodes(2).collect();
    let concepts = eps.iter().map(|e| e.concept_accuracy.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["concept".to_string()];
    header.extend(eps.iter().map(|e| format!("episode_{}", e.episode)));
    w.write_record(&header)?;
    for c in 0..concepts {
        let mut row = vec![c.to_string()];
        row.extend(eps.iter().map(|e| opt(e.concept_accuracy.get(c).copied().flatten())));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `metrics_<seed>.csv`, `curve_<seed>.csv`, `heatmap_<seed>.csv`,
/// `run.json` and `summary.json` into `out`.
pub fn emit_reports(run: &ExperimentRun, out: &Path) -> Result<Summary> {
    if run.runs.is_empty() {
        return Err(Error::Empty("experiment runs"));
    }
    fs::create_dir_all(out)?;
    for r in &run.runs {
        fs::write(out.join(format!("metrics_{}.csv", r.seed)), metrics_csv(&r.log)?)?;
        fs::write(out.join(format!("curve_{}.csv", r.seed)), curve_csv(&r.log)?)?;
        fs::write(out.join(format!("heatmap_{}.csv", r.seed)), heatmap_csv(&r.log)?)?;
    }
    let info = run_info(run);
    write_json(&out.join("run.json"), &info)?;
    let episodes: Vec<Vec<EpisodeRecord>> = run.runs.iter().map(|r| r.log.episodes.clone()).collect();
    let summary = summarize(&info, &episodes)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Rebuilds `summary.json` from `run.json` and the per-seed curve files.
pub fn reaggregate(out: &Path) -> Result<Summary> {
    let info: RunInfo = serde_json::from_str(&fs::read_to_string(out.join("run.json"))?)?;
    let episodes = info
        .seeds
        .iter()
        .map(|s| parse_curve_csv(&fs::read(out.join(format!("curve_{}.csv", s.seed)))?))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&info, &episodes)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// One row per method: accuracy and AUC as mean and standard deviation.
pub fn comparison_csv(summaries: &[Summary]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "accuracy_mean",
        "accuracy_std",
        "auc_mean",
        "auc_std",
        "seeds",
    ])?;
    for s in summaries {
        let a = &s.aggregate;
        w.write_record([
            s.teacher.clone(),
            a.mean_test_accuracy.mean.to_string(),
            a.mean_test_accuracy.std.to_string(),
            opt(a.final_test_auc.map(|x| x.mean)),
            opt(a.final_test_auc.map(|x| x.std)),
            a.mean_test_accuracy.n.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_comparison(summaries: &[Summary], out: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(format!("{stem}.csv")), comparison_csv(summaries)?)?;
    write_json(&out.join(format!("{stem}.json")), &summaries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(phase: u8, episode: usize, acc: f64) -> EpisodeRecord {
        EpisodeRecord {
            phase,
            episode,
            cumulative_reward: 0.1 * episode as f64,
            valid_accuracy: acc - 0.01,
            valid_auc: None,
            test_accuracy: acc,
            test_auc: Some(acc + 0.05),
            test_loss: 1.0 / 3.0,
            concept_accuracy: vec![Some(0.5), None, Some(2.0 / 3.0)],
        }
    }

    #[test]
    fn stat_matches_hand_values() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of(&[7.0]).unwrap().std, 0.0);
        assert!(Stat::of(&[]).is_none());
    }

    #[test]
    fn curve_round_trip_is_exact() {
        let log = MetricsLog {
            steps: Vec::new(),
            episodes: vec![record(1, 0, 0.61), record(2, 0, 0.7), record(2, 1, 0.1 + 0.2)],
        };
        let back = parse_curve_csv(&curve_csv(&log).unwrap()).unwrap();
        assert_eq!(back, log.episodes);
    }

    #[test]
    fn heatmap_shape() {
        let log = MetricsLog {
            steps: Vec::new(),
            episodes: vec![record(1, 0, 0.5), record(2, 0, 0.6), record(2, 1, 0.7)],
        };
        let text = String::from_utf8(heatmap_csv(&log).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "concept,episode_0,episode_1");
        assert_eq!(lines[2], "1,,");
    }

    #[test]
    fn summary_json_round_trips() {
        let info = RunInfo {
            task: "t".into(),
            teacher: "kadt".into(),
            phase1_student: "mlp".into(),
            phase2_student: "logistic".into(),
            episodes: 2,
            steps: 3,
            batch_size: 4,
            seeds: vec![
                SeedInfo {
                    seed: 0,
                    checksum_phase1: Some("00ff".into()),
                    checksum_phase2: Some("00ff".into()),
                    spl_threshold: None,
                },
                SeedInfo {
                    seed: 1,
                    checksum_phase1: None,
                    checksum_phase2: None,
                    spl_threshold: Some(0.5),
                },
            ],
        };
        let eps = vec![
            vec![record(1, 0, 0.2), record(2, 0, 0.6), record(2, 1, 0.8)],
            vec![record(2, 0, 0.5), record(2, 1, 0.9)],
        ];
        let s = summarize(&info, &eps).unwrap();
        assert!((s.seeds[0].mean_test_accuracy - 0.7).abs() < 1e-12);
        assert_eq!(s.seeds[1].final_test_accuracy, 0.9);
        assert!((s.aggregate.mean_test_accuracy.mean - 0.7).abs() < 1e-12);
        let text = serde_json::to_string(&s).unwrap();
        let back: Summary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(summarize(&info, &eps[..1]).is_err());
    }
}
