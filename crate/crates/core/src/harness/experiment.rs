use rayon::prelude::*;

use super::config::{DatasetSource, ExperimentConfig};
use super::dataset_io::load_csv;
use super::split::split;
use super::synthetic::generate_synthetic;
use crate::agent::{MetricsLog, Schedule, Teacher, TeachingData};
use crate::baselines::{select_spl_threshold, FixedTeacher, TeacherKind};
use crate::error::Result;
use crate::numerics::Rng;
use crate::student::{build_student, LabeledDataset};

/// Results of one seed of a two-phase run.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub log: MetricsLog,
    /// Teacher checksum at the end of phase 1 and after phase 2; `None`
    /// for teachers without parameters.
    pub checksum_phase1: Option<u64>,
    pub checksum_phase2: Option<u64>,
    pub spl_threshold: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedRun>,
}

const STREAM_SPLIT: u64 = 1;
const STREAM_TEACHER: u64 = 2;
const STREAM_PHASE1: u64 = 3;
const STREAM_PHASE2: u64 = 4;
const STREAM_STUDENT1: u64 = 5;
const STREAM_STUDENT2: u64 = 6;

pub fn load_dataset(config: &ExperimentConfig) -> Result<LabeledDataset> {
    match &config.dataset {
        DatasetSource::Synthetic(spec) => generate_synthetic(spec, &mut Rng::new(spec.seed)),
        DatasetSource::Csv { path } => load_csv(path),
    }
}

/// Stratified splits of `dataset` for one seed.
pub fn prepare_data(dataset: &LabeledDataset, config: &ExperimentConfig, seed: u64) -> Result<TeachingData> {
    let mut rng = Rng::new(seed).fork(STREAM_SPLIT);
    let s = split(dataset, &config.split, &mut rng)?;
    TeachingData::new(
        dataset.subset(&s.train)?,
        dataset.subset(&s.valid)?,
        dataset.subset(&s.test)?,
        s.reward_slice,
        config.concepts()?,
    )
}

pub fn schedule(config: &ExperimentConfig) -> Schedule {
    Schedule {
        episodes: config.episodes,
        steps: config.steps,
        batch_size: config.batch_size,
    }
}

/// Phase 1 trains the teacher with the phase-1 student; phase 2 teaches a
/// fresh phase-2 student with the frozen teacher.
pub fn run_seed(config: &ExperimentConfig, dataset: &LabeledDataset, seed: u64) -> Result<SeedRun> {
    let data = prepare_data(dataset, config, seed)?;
    let sched = schedule(config);
    let root = Rng::new(seed);
    let (d, o) = (data.train.feature_dim(), data.num_classes());
    let mut s1 = build_student(
        config.phase1_student,
        d,
        o,
        &config.student,
        &mut root.fork(STREAM_STUDENT1),
    );
    let mut s2 = build_student(
        config.phase2_student,
        d,
        o,
        &config.student,
        &mut root.fork(STREAM_STUDENT2),
    );
    let mut rng1 = root.fork(STREAM_PHASE1);
    let mut rng2 = root.fork(STREAM_PHASE2);

    if let Some(stack) = config.teacher.stack() {
        let mut teacher = Teacher::new(
            stack,
            config.agent.clone(),
            config.kt,
            &data,
            &mut root.fork(STREAM_TEACHER),
        )?;
        let mut log = teacher.run_training(s1.as_mut(), &data, &sched, &mut rng1)?;
        let c1 = teacher.checksum();
        log.extend(teacher.run_frozen_policy(s2.as_mut(), &data, &sched, &mut rng2)?);
        return Ok(SeedRun {
            seed,
            log,
            checksum_phase1: Some(c1),
            checksum_phase2: Some(teacher.checksum()),
            spl_threshold: None,
        });
    }
    let (fixed, mut log, lambda) = match config.teacher {
        TeacherKind::Spl => {
            let (lambda, log) = select_spl_threshold(s1.as_mut(), &data, &sched, &config.spl, &mut rng1)?;
            (FixedTeacher::Spl { lambda }, log, Some(lambda))
        }
        _ => (FixedTeacher::Random, MetricsLog::default(), None),
    };
    log.extend(fixed.run(s2.as_mut(), &data, &sched, &config.spl, 2, &mut rng2)?);
    Ok(SeedRun {
        seed,
        log,
        checksum_phase1: None,
        checksum_phase2: None,
        spl_threshold: lambda,
    })
}

/// Runs every seed, in parallel, and returns them in configuration order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| {
            log::info!("{} seed {seed}: starting", config.teacher);
            let r = run_seed(config, &dataset, seed);
            log::info!("{} seed {seed}: done", config.teacher);
            r
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentRun {
        config: config.clone(),
        runs,
    })
}
