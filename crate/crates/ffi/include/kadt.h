#ifndef KADT_H
#define KADT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KadtStatus {
  KADT_STATUS_OK = 0,
  KADT_STATUS_NULL_POINTER = 1,
  KADT_STATUS_INVALID_ARGUMENT = 2,
  KADT_STATUS_CONFIG = 3,
  KADT_STATUS_IO = 4,
  KADT_STATUS_DATA = 5,
  KADT_STATUS_RUN = 6,
  KADT_STATUS_PANIC = 7,
} KadtStatus;

/**
 * Experiment configuration.
 */
typedef struct KadtConfig KadtConfig;

/**
 * Results of a finished experiment.
 */
typedef struct KadtRun KadtRun;

/**
 * Stand-alone key-value memory knowledge tracer.
 */
typedef struct KadtTracer KadtTracer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *kadt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kadt_version(void);

/**
 * Dead-banded performance change used as the dense teaching reward.
 */
double kadt_reward(double current, double previous, double deadband);

/**
 * Default configuration for `preset` ("desk" or "paper"; null means desk).
 *
 * # Safety
 * `preset` must be null or a NUL-terminated string; `out` must be writable.
 */
enum KadtStatus kadt_config_new(const char *preset, struct KadtConfig **out_config);

/**
 * Parses a TOML configuration from memory.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum KadtStatus kadt_config_from_toml(const char *toml, struct KadtConfig **out_config);

/**
 * Loads a TOML configuration file; relative CSV paths resolve against its
 * directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum KadtStatus kadt_config_load(const char *path, struct KadtConfig **out_config);

/**
 * # Safety
 * `config` must come from this library and not be used afterwards.
 */
void kadt_config_free(struct KadtConfig *config);

/**
 * Sets episodes per phase and steps per episode.
 *
 * # Safety
 * `config` must be a live configuration handle.
 */
enum KadtStatus kadt_config_set_budget(struct KadtConfig *config, size_t episodes, size_t steps);

/**
 * Replaces the seed list.
 *
 * # Safety
 * `config` must be a live handle; `seeds` must point to `len` values.
 */
enum KadtStatus kadt_config_set_seeds(struct KadtConfig *config, const uint64_t *seeds, size_t len);

/**
 * Selects the teacher ("kadt", "kadt_kt", "kadt_basic", "l2t", "spl",
 * "random").
 *
 * # Safety
 * `config` must be a live handle; `teacher` a NUL-terminated string.
 */
enum KadtStatus kadt_config_set_teacher(struct KadtConfig *config, const char *teacher);

/**
 * Selects the student of each phase ("logistic" or "mlp"); a null
 * argument leaves that phase unchanged.
 *
 * # Safety
 * `config` must be a live handle; the names null or NUL-terminated.
 */
enum KadtStatus kadt_config_set_students(struct KadtConfig *config,
                                         const char *phase1,
                                         const char *phase2);

/**
 * Runs both phases for every configured seed.
 *
 * # Safety
 * `config` must be a live handle; `out_run` must be writable.
 */
enum KadtStatus kadt_run_experiment(const struct KadtConfig *config, struct KadtRun **out_run);

/**
 * # Safety
 * `run` must come from this library and not be used afterwards.
 */
void kadt_run_free(struct KadtRun *run);

/**
 * Number of seeds in a run; 0 for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t kadt_run_num_seeds(const struct KadtRun *run);

/**
 * Seed value and phase-2 mean test accuracy of entry `index`.
 *
 * # Safety
 * `run` must be a live handle; the outputs writable.
 */
enum KadtStatus kadt_run_seed_accuracy(const struct KadtRun *run,
                                       size_t index,
                                       uint64_t *out_seed,
                                       double *out_accuracy);

/**
 * Teacher checksums after phase 1 and phase 2 for entry `index`. Teachers
 * without parameters report `KADT_STATUS_INVALID_ARGUMENT`.
 *
 * # Safety
 * `run` must be a live handle; the outputs writable.
 */
enum KadtStatus kadt_run_seed_checksums(const struct KadtRun *run,
                                        size_t index,
                                        uint64_t *out_phase1,
                                        uint64_t *out_phase2);

/**
 * Writes metrics, curve and heatmap CSVs plus `run.json` and
 * `summary.json` into `dir`.
 *
 * # Safety
 * `run` must be a live handle; `dir` a NUL-terminated string.
 */
enum KadtStatus kadt_run_write_reports(const struct KadtRun *run, const char *dir);

/**
 * New tracer with default dimensions over `num_samples` samples and
 * `num_concepts` latent concepts.
 *
 * # Safety
 * `out_tracer` must be writable.
 */
enum KadtStatus kadt_tracer_new(size_t num_samples,
                                size_t num_concepts,
                                uint64_t seed,
                                struct KadtTracer **out_tracer);

/**
 * # Safety
 * `tracer` must come from this library and not be used afterwards.
 */
void kadt_tracer_free(struct KadtTracer *tracer);

/**
 * Number of concepts, i.e. the length of a knowledge vector; 0 for null.
 *
 * # Safety
 * `tracer` must be null or a live handle.
 */
size_t kadt_tracer_num_concepts(const struct KadtTracer *tracer);

/**
 * Knowledge vector and estimated loss for `sample`. `out_knowledge` must
 * hold `len` doubles and `len` must equal the concept count.
 *
 * # Safety
 * `tracer` must be a live handle; the outputs writable.
 */
enum KadtStatus kadt_tracer_read(const struct KadtTracer *tracer,
                                 size_t sample,
                                 double *out_knowledge,
                                 size_t len,
                                 double *out_est_loss);

/**
 * Records an outcome for `sample`: 0 when the student was right, 1 when
 * it was wrong.
 *
 * # Safety
 * `tracer` must be a live handle.
 */
enum KadtStatus kadt_tracer_write(struct KadtTracer *tracer, size_t sample, uint8_t pred_error);

/**
 * One optimizer step fitting estimated to observed losses over `len`
 * samples; writes the pre-step RMSE.
 *
 * # Safety
 * `tracer` must be a live handle; `samples` and `losses` must point to
 * `len` values each; `out_rmse` must be writable.
 */
enum KadtStatus kadt_tracer_train_step(struct KadtTracer *tracer,
                                       const size_t *samples,
                                       const double *losses,
                                       size_t len,
                                       double *out_rmse);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KADT_H */
