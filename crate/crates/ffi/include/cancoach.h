#ifndef CANCOACH_H
#define CANCOACH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bit set in the `events` output of [`cc_director_tick`].
 */
#define CC_EVENT_SEGMENT_CHANGED 1

#define CC_EVENT_COMPLETED 2

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  CC_STATUS_PARSE_ERROR = 3,
  CC_STATUS_RANGE_ERROR = 4,
  CC_STATUS_NOT_FOUND = 5,
  CC_STATUS_UNSUPPORTED = 6,
  CC_STATUS_IO_ERROR = 7,
  CC_STATUS_PANIC = 8,
} CcStatus;

typedef enum CcCue {
  CC_CUE_NONE = 0,
  CC_CUE_ACCELERATE = 1,
  CC_CUE_DECELERATE = 2,
} CcCue;

typedef enum CcFeedback {
  CC_FEEDBACK_INSTRUCTED = 0,
  CC_FEEDBACK_COACHED = 1,
  CC_FEEDBACK_GHOST = 2,
} CcFeedback;

typedef enum CcModeCommand {
  CC_MODE_COMMAND_ADVANCE = 0,
  CC_MODE_COMMAND_REVERSE = 1,
} CcModeCommand;

typedef struct CcCatalog CcCatalog;

typedef struct CcDirector CcDirector;

typedef struct CcGhost CcGhost;

typedef struct CcSimulation CcSimulation;

/**
 * A classic CAN frame.
 */
typedef struct CcFrame {
  double timestamp;
  uint8_t bus;
  uint16_t id;
  uint8_t len;
  uint8_t data[8];
} CcFrame;

/**
 * Directive published by the director. `set_point` is NaN for velocity
 * matching.
 */
typedef struct CcDirective {
  double set_point;
  enum CcFeedback feedback;
  size_t segment_index;
} CcDirective;

/**
 * One simulation tick. Quantities that are unavailable are NaN.
 */
typedef struct CcSample {
  double t;
  double v;
  double v_lead;
  double s;
  double delta_v;
  double tau;
  double set_point;
  enum CcCue cue;
  enum CcFeedback feedback;
  size_t segment_index;
  bool published;
  bool finished;
} CcSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *cc_last_error(void);

/**
 * Library version as a static string.
 */
const char *cc_version(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void cc_string_free(char *s);

/**
 * `s / v`; fails with `CC_STATUS_RANGE_ERROR` when `v` is at or below 1 m/s.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CcStatus cc_time_gap(double s, double v, double *out);

enum CcCue cc_time_gap_cue(double tau, double tau_star, double deadband);

enum CcCue cc_velocity_cue(double delta_v, double deadband);

/**
 * Integer percent reduction from `baseline` to `treatment`. Fails with
 * `CC_STATUS_INVALID_ARGUMENT` when the baseline is not positive.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CcStatus cc_percent_reduction(double baseline, double treatment, int32_t *out);

/**
 * Parse one `<ts> <bus> <ID>#<HEX>` log line.
 *
 * # Safety
 * `line` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_parse_log_line(const char *line, struct CcFrame *out);

/**
 * The built-in vehicle catalog.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CcStatus cc_catalog_builtin(struct CcCatalog **out);

/**
 * Parse a TOML catalog document.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_catalog_load(const char *text, struct CcCatalog **out);

/**
 * # Safety
 * `catalog` must be null or a handle that has not been freed.
 */
void cc_catalog_free(struct CcCatalog *catalog);

/**
 * Decode one named signal from `frame`.
 *
 * # Safety
 * Pointers must be valid; `signal` must be NUL-terminated.
 */
enum CcStatus cc_catalog_decode(const struct CcCatalog *catalog,
                                const struct CcFrame *frame,
                                const char *signal,
                                double *out);

/**
 * Encode `message` from `count` signal name/value pairs. Every signal of the
 * message must be given.
 *
 * # Safety
 * `names` and `values` must each point to `count` elements; other pointers
 * must be valid.
 */
enum CcStatus cc_catalog_encode(const struct CcCatalog *catalog,
                                const char *message,
                                const char *const *names,
                                const double *values,
                                size_t count,
                                double timestamp,
                                uint8_t bus,
                                struct CcFrame *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum CcStatus cc_ghost_new(double v_ghost, struct CcGhost **out);

/**
 * Advance the virtual gap by `dt`. `reset` (may be null) receives whether
 * the gap left its bounds and was re-initialised.
 *
 * # Safety
 * `ghost` must be a live handle; `reset` null or valid.
 */
enum CcStatus cc_ghost_step(struct CcGhost *ghost, double v_ego, double dt, bool *reset);

/**
 * # Safety
 * `ghost` must be a live handle and `out` a valid pointer.
 */
enum CcStatus cc_ghost_gap(const struct CcGhost *ghost, double *out);

/**
 * # Safety
 * `ghost` must be a live handle and `out` a valid pointer.
 */
enum CcStatus cc_ghost_reset_count(const struct CcGhost *ghost, uint32_t *out);

/**
 * # Safety
 * `ghost` must be null or a handle that has not been freed.
 */
void cc_ghost_free(struct CcGhost *ghost);

/**
 * The eight-segment study schedule with `segment_duration` seconds per
 * segment.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CcStatus cc_director_new_study(double segment_duration, struct CcDirector **out);

/**
 * Director for the `[[segment]]` entries of a run configuration document.
 * `base_dir` (may be null) resolves relative paths in the document.
 *
 * # Safety
 * `toml` must be NUL-terminated, `base_dir` null or NUL-terminated, `out`
 * valid.
 */
enum CcStatus cc_director_from_config(const char *toml,
                                      const char *base_dir,
                                      struct CcDirector **out);

/**
 * # Safety
 * `director` must be null or a handle that has not been freed.
 */
void cc_director_free(struct CcDirector *director);

/**
 * Advance the clock by `dt`. `events` (may be null) receives a mask of
 * `CC_EVENT_*` bits.
 *
 * # Safety
 * `director` must be a live handle; `events` null or valid.
 */
enum CcStatus cc_director_tick(struct CcDirector *director, double dt, uint32_t *events);

/**
 * If a publish is due, mark it and fill `out`; `published` tells which.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CcStatus cc_director_poll_publish(struct CcDirector *director,
                                       bool *published,
                                       struct CcDirective *out);

/**
 * The directive in force now, without publishing.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CcStatus cc_director_current(const struct CcDirector *director, struct CcDirective *out);

/**
 * Apply an operator command. `events` (may be null) receives `CC_EVENT_*`
 * bits.
 *
 * # Safety
 * `director` must be a live handle; `events` null or valid.
 */
enum CcStatus cc_director_command(struct CcDirector *director,
                                  enum CcModeCommand command,
                                  uint32_t *events);

/**
 * Seconds elapsed in the current segment.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CcStatus cc_director_elapsed(const struct CcDirector *director, double *out);

/**
 * # Safety
 * `director` must be a live handle or null (reported as finished).
 */
bool cc_director_is_finished(const struct CcDirector *director);

/**
 * Label of the current segment; release with [`cc_string_free`]. Null on
 * error.
 *
 * # Safety
 * `director` must be a live handle.
 */
char *cc_director_mode_label(const struct CcDirector *director);

/**
 * Simulation from a run configuration document. `base_dir` (may be null)
 * resolves relative catalog paths.
 *
 * # Safety
 * `toml` must be NUL-terminated, `base_dir` null or NUL-terminated, `out`
 * valid.
 */
enum CcStatus cc_sim_from_config(const char *toml, const char *base_dir, struct CcSimulation **out);

/**
 * # Safety
 * `sim` must be null or a handle that has not been freed.
 */
void cc_sim_free(struct CcSimulation *sim);

/**
 * Advance one tick and report the state at its start.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CcStatus cc_sim_step(struct CcSimulation *sim, struct CcSample *out);

/**
 * Throttle for the next tick, in `[-1, 1]`. Only used by `kind = "human"`
 * drivers.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum CcStatus cc_sim_set_throttle(struct CcSimulation *sim, double throttle);

/**
 * # Safety
 * `sim` must be a live handle; `events` null or valid.
 */
enum CcStatus cc_sim_command(struct CcSimulation *sim,
                             enum CcModeCommand command,
                             uint32_t *events);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CANCOACH_H */
