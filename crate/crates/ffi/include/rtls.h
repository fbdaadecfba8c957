#ifndef RTLS_H
#define RTLS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RtlsStatus {
  RTLS_STATUS_OK = 0,
  RTLS_STATUS_NULL_POINTER = 1,
  RTLS_STATUS_INVALID_ARGUMENT = 2,
  RTLS_STATUS_INVALID_CONFIG = 3,
  /**
   * The problem violates a solver precondition.
   */
  RTLS_STATUS_SOLVER_PRECONDITION = 4,
  RTLS_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  RTLS_STATUS_INTERNAL = 6,
} RtlsStatus;

/**
 * Opaque simulation config.
 */
typedef struct RtlsConfig RtlsConfig;

/**
 * Opaque running simulation.
 */
typedef struct RtlsSim RtlsSim;

/**
 * Opaque statistics of a finished simulation.
 */
typedef struct RtlsStats RtlsStats;

typedef struct RtlsSolverResult {
  double x;
  double y;
  double z;
  bool converged;
  uint32_t iterations;
  double residual_norm;
} RtlsSolverResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread, or an empty string. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *rtls_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rtls_version(void);

/**
 * Range multilateration by Levenberg-Marquardt.
 *
 * `anchors` holds `3 * n` coordinates, `distances` holds `n`. `initial` is
 * three coordinates or null for the anchor centroid.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum RtlsStatus rtls_lm_multilaterate(const double *anchors,
                                      const double *distances,
                                      size_t n,
                                      const double *initial,
                                      double tolerance,
                                      struct RtlsSolverResult *out);

/**
 * Globally optimal range multilateration. Same layout as
 * [`rtls_lm_multilaterate`] without a starting point.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum RtlsStatus rtls_larsson_multilaterate(const double *anchors,
                                           const double *distances,
                                           size_t n,
                                           double tolerance,
                                           struct RtlsSolverResult *out);

/**
 * Passive position from range differences to an initiator at `initiator`
 * (three coordinates). `initial` is three coordinates, or null for the
 * closed-form linear estimate.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum RtlsStatus rtls_lm_tdoa(const double *initiator,
                             const double *anchors,
                             const double *range_differences,
                             size_t n,
                             const double *initial,
                             double tolerance,
                             struct RtlsSolverResult *out);

/**
 * Geometric dilution of precision at `tag` (three coordinates).
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum RtlsStatus rtls_gdop(const double *anchors, size_t n, const double *tag, double *out);

/**
 * Energy (microjoules) and duration (microseconds) of one response by the
 * anchor in 1-based `slot_index`, with the default cost model.
 *
 * # Safety
 * `energy_uj` and `duration_us` must be valid or null.
 */
enum RtlsStatus rtls_anchor_event_cost(uint32_t slot_index, double *energy_uj, double *duration_us);

/**
 * The bundled config.
 *
 * # Safety
 * `out` must be valid.
 */
enum RtlsStatus rtls_config_bundled(struct RtlsConfig **out);

/**
 * Parses and validates a TOML config.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` valid.
 */
enum RtlsStatus rtls_config_from_toml(const char *toml, struct RtlsConfig **out);

/**
 * Reads and validates a config file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid.
 */
enum RtlsStatus rtls_config_load(const char *path, struct RtlsConfig **out);

/**
 * Overrides seed, days and the number of random tags. Negative `days` or
 * `tags` leave the value unchanged.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum RtlsStatus rtls_config_set_run(struct RtlsConfig *config,
                                    uint64_t seed,
                                    int64_t days,
                                    int64_t tags);

/**
 * Selects the scheduler: "aimd", "bounded_aimd" or "constant_rate".
 *
 * # Safety
 * `config` must be a live handle and `variant` a NUL-terminated string.
 */
enum RtlsStatus rtls_config_set_scheduler(struct RtlsConfig *config, const char *variant);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void rtls_config_free(struct RtlsConfig *config);

/**
 * Prepares a simulation. The config is copied.
 *
 * # Safety
 * `config` must be a live handle and `out` valid.
 */
enum RtlsStatus rtls_sim_new(const struct RtlsConfig *config, struct RtlsSim **out);

/**
 * Advances the simulation by `minutes` steps.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum RtlsStatus rtls_sim_step(struct RtlsSim *sim, uint64_t minutes);

/**
 * Minutes simulated so far, or 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uint64_t rtls_sim_minute(const struct RtlsSim *sim);

/**
 * Ends the simulation and returns its statistics. The simulation handle is
 * consumed, even on failure.
 *
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum RtlsStatus rtls_sim_finish(struct RtlsSim *sim, struct RtlsStats **out);

/**
 * # Safety
 * `sim` must be null or a handle not yet freed or finished.
 */
void rtls_sim_free(struct RtlsSim *sim);

/**
 * Runs the configured number of days.
 *
 * # Safety
 * `config` must be a live handle and `out` valid.
 */
enum RtlsStatus rtls_run(const struct RtlsConfig *config, struct RtlsStats **out);

/**
 * Number of nodes, anchors first.
 *
 * # Safety
 * `stats` must be null or a live handle.
 */
size_t rtls_stats_node_count(const struct RtlsStats *stats);

/**
 * Completed days.
 *
 * # Safety
 * `stats` must be null or a live handle.
 */
uint32_t rtls_stats_days(const struct RtlsStats *stats);

/**
 * State of charge of `node` at the end of the last completed day.
 *
 * # Safety
 * `stats` must be a live handle and `out` valid.
 */
enum RtlsStatus rtls_stats_final_soc(const struct RtlsStats *stats, size_t node, double *out);

/**
 * Mean over tags of total localizations.
 *
 * # Safety
 * `stats` must be null or a live handle.
 */
double rtls_stats_mean_localizations_per_tag(const struct RtlsStats *stats);

/**
 * Writes the CSV outputs into directory `dir`.
 *
 * # Safety
 * `stats` must be a live handle and `dir` a NUL-terminated string.
 */
enum RtlsStatus rtls_stats_write(const struct RtlsStats *stats, const char *dir);

/**
 * # Safety
 * `stats` must be null or a handle not yet freed.
 */
void rtls_stats_free(struct RtlsStats *stats);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RTLS_H */
