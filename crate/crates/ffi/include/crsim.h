#ifndef CRSIM_H
#define CRSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrsimStatus {
  CRSIM_STATUS_OK = 0,
  CRSIM_STATUS_NULL_ARGUMENT = 1,
  CRSIM_STATUS_INVALID_UTF8 = 2,
  CRSIM_STATUS_VALIDATION = 3,
  CRSIM_STATUS_INVALID_PARAMETER = 4,
  CRSIM_STATUS_NO_UNIQUE_STATIONARY = 5,
  CRSIM_STATUS_DEMAND_EXCEEDS_CAPACITY = 6,
  CRSIM_STATUS_NEVER_COMPLETES = 7,
  CRSIM_STATUS_BUFFER_TOO_SMALL = 8,
  CRSIM_STATUS_INTERNAL = 99,
} CrsimStatus;

typedef enum CrsimMode {
  CRSIM_MODE_NORMAL = 0,
  CRSIM_MODE_WARNING = 1,
  CRSIM_MODE_FAILURE = 2,
} CrsimMode;

// Opaque result of one simulation run.
typedef struct CrsimReport CrsimReport;

// Opaque scenario handle.
typedef struct CrsimScenario CrsimScenario;

typedef struct CrsimMetrics {
  uint64_t arrivals;
  uint64_t admitted;
  uint64_t blocked;
  uint64_t completed;
  uint64_t dropped;
  uint64_t still_active;
  uint64_t negotiations;
  uint64_t grants;
  uint64_t refusals;
  uint64_t handovers;
  uint64_t failed_handovers;
  uint64_t replans;
  uint64_t interference_steps;
  uint64_t steps_normal;
  uint64_t steps_warning;
  uint64_t steps_failure;
  double empirical_blocking;
  double empirical_noncompletion;
} CrsimMetrics;

// Sensitivities of one traffic type, each from 1 (very low) to 5 (very high).
typedef struct CrsimQosProfile {
  uint8_t bandwidth;
  uint8_t delay;
  uint8_t loss;
  uint8_t jitter;
} CrsimQosProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *crsim_version(void);

// Message for the last failed call on this thread, or NULL. Valid until
// the next call into the library from this thread.
const char *crsim_last_error(void);

// Parses and validates a scenario from JSON.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum CrsimStatus crsim_scenario_from_json(const char *json, struct CrsimScenario **out);

// The built-in canonical scenario. Never fails.
struct CrsimScenario *crsim_scenario_canonical(void);

// # Safety
// `scenario` must come from this library and not be freed twice. NULL is
// ignored.
void crsim_scenario_free(struct CrsimScenario *scenario);

// Runs the scenario with `seed` (the scenario's own seed when
// `override_seed` is false).
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum CrsimStatus crsim_simulate(const struct CrsimScenario *scenario,
                                bool override_seed,
                                uint64_t seed,
                                struct CrsimReport **out);

// # Safety
// `report` must be a live handle; `out` must be writable.
enum CrsimStatus crsim_report_metrics(const struct CrsimReport *report, struct CrsimMetrics *out);

// Copies the 64-character hex trace hash plus a NUL into `buf`.
//
// # Safety
// `report` must be a live handle; `buf` must hold `len` bytes.
enum CrsimStatus crsim_report_trace_hash(const struct CrsimReport *report, char *buf, size_t len);

// Metrics and provenance as JSON. Release with [`crsim_string_free`].
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum CrsimStatus crsim_report_to_json(const struct CrsimReport *report, char **out);

// # Safety
// `report` must come from this library and not be freed twice. NULL is
// ignored.
void crsim_report_free(struct CrsimReport *report);

// # Safety
// `s` must come from this library and not be freed twice. NULL is ignored.
void crsim_string_free(char *s);

// Stationary occupancy law of a band; writes `capacity + 1` values.
//
// # Safety
// `out` must hold `len` doubles.
enum CrsimStatus crsim_stationary(uint32_t capacity, double p, double q, double *out, size_t len);

// Blocking probability for `demand` over `count` independent bands given
// as parallel arrays.
//
// # Safety
// Each array must hold `count` elements; `out` must be writable.
enum CrsimStatus crsim_blocking(const uint32_t *capacities,
                                const double *p,
                                const double *q,
                                size_t count,
                                uint32_t demand,
                                double *out);

// Probability that a session on a single band is dropped before it
// completes.
//
// # Safety
// `out` must be writable.
enum CrsimStatus crsim_noncompletion(uint32_t capacity,
                                     double p,
                                     double q,
                                     uint32_t demand,
                                     double completion,
                                     double grant,
                                     double *out);

// # Safety
// `out` must be writable.
enum CrsimStatus crsim_classify_mode(uint32_t pu_used,
                                     uint32_t demand,
                                     uint32_t capacity,
                                     enum CrsimMode *out);

// Sensitivity row for a traffic type given by its snake_case key, e.g.
// `"video_conferencing"`.
//
// # Safety
// `traffic` must be a NUL-terminated string; `out` must be writable.
enum CrsimStatus crsim_qos_profile(const char *traffic, struct CrsimQosProfile *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRSIM_H */
