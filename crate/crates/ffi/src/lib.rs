//! C interface to the teaching engine.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_new`/`*_load` function and released by the matching `*_free`. Every
//! fallible call returns a [`KadtStatus`]; on failure the message is kept per
//! thread and can be fetched with [`kadt_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use kadt::harness::{emit_reports, ExperimentConfig, ExperimentRun, Preset};
use kadt::ktrace::{KnowledgeTracer, KtConfig};
use kadt::numerics::Rng;
use kadt::student::StudentKind;
use kadt::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KadtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Data = 5,
    Run = 6,
    Panic = 7,
}

/// Experiment configuration.
pub struct KadtConfig(ExperimentConfig);

/// Results of a finished experiment.
pub struct KadtRun(ExperimentRun);

/// Stand-alone key-value memory knowledge tracer.
pub struct KadtTracer(KnowledgeTracer);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KadtStatus {
    match e {
        Error::Config(_) | Error::Unknown { .. } => KadtStatus::Config,
        Error::Io(_) => KadtStatus::Io,
        Error::CsvEmpty
        | Error::CsvMissingLabel
        | Error::CsvNonNumericFeature { .. }
        | Error::CsvNonIntegerLabel { .. }
        | Error::Csv(_)
        | Error::Json(_)
        | Error::TooFewSamples { .. } => KadtStatus::Data,
        Error::Run { .. } | Error::NonFinite(_) => KadtStatus::Run,
        _ => KadtStatus::InvalidArgument,
    }
}

struct Fail(KadtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(KadtStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KadtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KadtStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            KadtStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(KadtStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(KadtStatus::NullPointer, format!("{what} is null")))
}

unsafe fn obj_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(KadtStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<T>(p: *mut T, value: T) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail(KadtStatus::NullPointer, "output pointer is null".into()));
    }
    p.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn kadt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kadt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Dead-banded performance change used as the dense teaching reward.
#[no_mangle]
pub extern "C" fn kadt_reward(current: f64, previous: f64, deadband: f64) -> f64 {
    kadt::agent::reward(current, previous, deadband)
}

/// Default configuration for `preset` ("desk" or "paper"; null means desk).
///
/// # Safety
/// `preset` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_config_new(preset: *const c_char, out_config: *mut *mut KadtConfig) -> KadtStatus {
    guard(|| {
        let preset = if preset.is_null() {
            Preset::Desk
        } else {
            str_arg(preset, "preset")?.parse()?
        };
        out(
            out_config,
            Box::into_raw(Box::new(KadtConfig(ExperimentConfig::preset(preset)))),
        )
    })
}

/// Parses a TOML configuration from memory.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_config_from_toml(toml: *const c_char, out_config: *mut *mut KadtConfig) -> KadtStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_toml_str(str_arg(toml, "toml")?)?;
        out(out_config, Box::into_raw(Box::new(KadtConfig(cfg))))
    })
}

/// Loads a TOML configuration file; relative CSV paths resolve against its
/// directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_config_load(path: *const c_char, out_config: *mut *mut KadtConfig) -> KadtStatus {
    guard(|| {
        let cfg = ExperimentConfig::load(Path::new(str_arg(path, "path")?))?;
        out(out_config, Box::into_raw(Box::new(KadtConfig(cfg))))
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kadt_config_free(config: *mut KadtConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Sets episodes per phase and steps per episode.
///
/// # Safety
/// `config` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn kadt_config_set_budget(config: *mut KadtConfig, episodes: usize, steps: usize) -> KadtStatus {
    guard(|| {
        let c = obj_mut(config, "config")?;
        let mut next = c.0.clone();
        next.episodes = episodes;
        next.steps = steps;
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

/// Replaces the seed list.
///
/// # Safety
/// `config` must be a live handle; `seeds` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn kadt_config_set_seeds(config: *mut KadtConfig, seeds: *const u64, len: usize) -> KadtStatus {
    guard(|| {
        let c = obj_mut(config, "config")?;
        if seeds.is_null() {
            return Err(Fail(KadtStatus::NullPointer, "seeds is null".into()));
        }
        let mut next = c.0.clone();
        next.seeds = std::slice::from_raw_parts(seeds, len).to_vec();
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

/// Selects the teacher ("kadt", "kadt_kt", "kadt_basic", "l2t", "spl",
/// "random").
///
/// # Safety
/// `config` must be a live handle; `teacher` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kadt_config_set_teacher(config: *mut KadtConfig, teacher: *const c_char) -> KadtStatus {
    guard(|| {
        let c = obj_mut(config, "config")?;
        c.0.teacher = str_arg(teacher, "teacher")?.parse()?;
        Ok(())
    })
}

/// Selects the student of each phase ("logistic" or "mlp"); a null
/// argument leaves that phase unchanged.
///
/// # Safety
/// `config` must be a live handle; the names null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kadt_config_set_students(
    config: *mut KadtConfig,
    phase1: *const c_char,
    phase2: *const c_char,
) -> KadtStatus {
    guard(|| {
        let c = obj_mut(config, "config")?;
        let p1: Option<StudentKind> = if phase1.is_null() {
            None
        } else {
            Some(str_arg(phase1, "phase1")?.parse()?)
        };
        let p2: Option<StudentKind> = if phase2.is_null() {
            None
        } else {
            Some(str_arg(phase2, "phase2")?.parse()?)
        };
        if let Some(k) = p1 {
            c.0.phase1_student = k;
        }
        if let Some(k) = p2 {
            c.0.phase2_student = k;
        }
        Ok(())
    })
}

/// Runs both phases for every configured seed.
///
/// # Safety
/// `config` must be a live handle; `out_run` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_run_experiment(config: *const KadtConfig, out_run: *mut *mut KadtRun) -> KadtStatus {
    guard(|| {
        let run = kadt::harness::run_experiment(&obj(config, "config")?.0)?;
        out(out_run, Box::into_raw(Box::new(KadtRun(run))))
    })
}

/// # Safety
/// `run` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kadt_run_free(run: *mut KadtRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of seeds in a run; 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kadt_run_num_seeds(run: *const KadtRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.runs.len())
}

/// Seed value and phase-2 mean test accuracy of entry `index`.
///
/// # Safety
/// `run` must be a live handle; the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_run_seed_accuracy(
    run: *const KadtRun,
    index: usize,
    out_seed: *mut u64,
    out_accuracy: *mut f64,
) -> KadtStatus {
    guard(|| {
        let r = obj(run, "run")?;
        let s =
            r.0.runs
                .get(index)
                .ok_or_else(|| invalid(format!("seed index {index} out of range")))?;
        let acc = s
            .log
            .mean_test_accuracy(2)
            .ok_or_else(|| invalid("run has no phase-2 episodes"))?;
        out(out_seed, s.seed)?;
        out(out_accuracy, acc)
    })
}

/// Teacher checksums after phase 1 and phase 2 for entry `index`. Teachers
/// without parameters report `KADT_STATUS_INVALID_ARGUMENT`.
///
/// # Safety
/// `run` must be a live handle; the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_run_seed_checksums(
    run: *const KadtRun,
    index: usize,
    out_phase1: *mut u64,
    out_phase2: *mut u64,
) -> KadtStatus {
    guard(|| {
        let r = obj(run, "run")?;
        let s =
            r.0.runs
                .get(index)
                .ok_or_else(|| invalid(format!("seed index {index} out of range")))?;
        match (s.checksum_phase1, s.checksum_phase2) {
            (Some(a), Some(b)) => {
                out(out_phase1, a)?;
                out(out_phase2, b)
            }
            _ => Err(invalid("this teacher has no parameters")),
        }
    })
}

/// Writes metrics, curve and heatmap CSVs plus `run.json` and
/// `summary.json` into `dir`.
///
/// # Safety
/// `run` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kadt_run_write_reports(run: *const KadtRun, dir: *const c_char) -> KadtStatus {
    guard(|| {
        let r = obj(run, "run")?;
        emit_reports(&r.0, Path::new(str_arg(dir, "dir")?))?;
        Ok(())
    })
}

/// New tracer with default dimensions over `num_samples` samples and
/// `num_concepts` latent concepts.
///
/// # Safety
/// `out_tracer` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_tracer_new(
    num_samples: usize,
    num_concepts: usize,
    seed: u64,
    out_tracer: *mut *mut KadtTracer,
) -> KadtStatus {
    guard(|| {
        let kt = KnowledgeTracer::new(num_samples, num_concepts, KtConfig::default(), &mut Rng::new(seed))?;
        out(out_tracer, Box::into_raw(Box::new(KadtTracer(kt))))
    })
}

/// # Safety
/// `tracer` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kadt_tracer_free(tracer: *mut KadtTracer) {
    if !tracer.is_null() {
        drop(Box::from_raw(tracer));
    }
}

/// Number of concepts, i.e. the length of a knowledge vector; 0 for null.
///
/// # Safety
/// `tracer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kadt_tracer_num_concepts(tracer: *const KadtTracer) -> usize {
    tracer.as_ref().map_or(0, |t| t.0.num_concepts())
}

/// Knowledge vector and estimated loss for `sample`. `out_knowledge` must
/// hold `len` doubles and `len` must equal the concept count.
///
/// # Safety
/// `tracer` must be a live handle; the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_tracer_read(
    tracer: *const KadtTracer,
    sample: usize,
    out_knowledge: *mut f64,
    len: usize,
    out_est_loss: *mut f64,
) -> KadtStatus {
    guard(|| {
        let t = obj(tracer, "tracer")?;
        if len != t.0.num_concepts() {
            return Err(invalid(format!(
                "buffer holds {len} values, {} needed",
                t.0.num_concepts()
            )));
        }
        if out_knowledge.is_null() {
            return Err(Fail(KadtStatus::NullPointer, "knowledge buffer is null".into()));
        }
        let r = t.0.read(sample)?;
        std::slice::from_raw_parts_mut(out_knowledge, len).copy_from_slice(&r.knowledge.values);
        out(out_est_loss, r.est_loss)
    })
}

/// Records an outcome for `sample`: 0 when the student was right, 1 when
/// it was wrong.
///
/// # Safety
/// `tracer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kadt_tracer_write(tracer: *mut KadtTracer, sample: usize, pred_error: u8) -> KadtStatus {
    guard(|| {
        obj_mut(tracer, "tracer")?.0.write(sample, pred_error)?;
        Ok(())
    })
}

/// One optimizer step fitting estimated to observed losses over `len`
/// samples; writes the pre-step RMSE.
///
/// # Safety
/// `tracer` must be a live handle; `samples` and `losses` must point to
/// `len` values each; `out_rmse` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kadt_tracer_train_step(
    tracer: *mut KadtTracer,
    samples: *const usize,
    losses: *const f64,
    len: usize,
    out_rmse: *mut f64,
) -> KadtStatus {
    guard(|| {
        let t = obj_mut(tracer, "tracer")?;
        if samples.is_null() || losses.is_null() {
            return Err(Fail(KadtStatus::NullPointer, "batch pointers are null".into()));
        }
        let batch = std::slice::from_raw_parts(samples, len);
        let actual = std::slice::from_raw_parts(losses, len);
        let rmse = t.0.kt_train_step(batch, actual)?;
        out(out_rmse, rmse)
    })
}
