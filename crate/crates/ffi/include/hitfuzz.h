#ifndef HITFUZZ_H
#define HITFUZZ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HfOutcome {
  HF_OUTCOME_VALID_NOMINAL = 0,
  HF_OUTCOME_VALID_ABNORMAL = 1,
  HF_OUTCOME_INVALID_UNTESTED = 2,
  HF_OUTCOME_ABORTED = 3,
} HfOutcome;

typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_ARGUMENT = 1,
  HF_STATUS_INVALID_UTF8 = 2,
  HF_STATUS_PARSE = 3,
  HF_STATUS_OUT_OF_RANGE = 4,
  HF_STATUS_RUN = 5,
  HF_STATUS_BUFFER_TOO_SMALL = 6,
  HF_STATUS_PANIC = 7,
} HfStatus;

// A safety ledger entry.
typedef struct HfLedger HfLedger;

// One executed test with its profile row.
typedef struct HfRun HfRun;

// An indexable scenario over a space.
typedef struct HfScenario HfScenario;

// A fuzzing space.
typedef struct HfSpace HfSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, static storage.
const char *hf_version(void);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *hf_last_error(void);

enum HfStatus hf_space_default(struct HfSpace **out_space);

// Parses a fuzzing space document (JSON).
enum HfStatus hf_space_parse(const char *json, struct HfSpace **out_space);

void hf_space_free(struct HfSpace *space);

// Scenario over `space`. A null constraint means the whole legal space.
enum HfStatus hf_scenario_new(const struct HfSpace *space,
                              const char *constraint_json,
                              struct HfScenario **out_scenario);

enum HfStatus hf_scenario_count(const struct HfScenario *scenario, uint64_t *out_count);

// Test document at `index` as compact JSON.
enum HfStatus hf_scenario_test_json(const struct HfScenario *scenario,
                                    uint64_t index,
                                    char *buf,
                                    size_t cap,
                                    size_t *needed);

void hf_scenario_free(struct HfScenario *scenario);

// Runs one test document with the proxy human and scores it against its blueprint.
enum HfStatus hf_run_test(const struct HfSpace *space,
                          const char *test_json,
                          struct HfRun **out_run);

enum HfStatus hf_run_outcome(const struct HfRun *run, enum HfOutcome *out_outcome);

// Directed Hausdorff distance from the blueprint to this run.
enum HfStatus hf_run_max_deviation(const struct HfRun *run, double *out_meters);

// Flight log in its text format.
enum HfStatus hf_run_log(const struct HfRun *run, char *buf, size_t cap, size_t *needed);

void hf_run_free(struct HfRun *run);

// Max over `from` of the distance to the nearest point of `to`. Points are packed xyz triples.
enum HfStatus hf_directed_hausdorff(const double *from,
                                    size_t n_from,
                                    const double *to,
                                    size_t n_to,
                                    double *out_meters);

// Parses a ledger entry (TOML).
enum HfStatus hf_ledger_parse(const char *toml, struct HfLedger **out_entry);

// Writes 1 when the entry is ready for field testing, else 0.
enum HfStatus hf_ledger_gate(const struct HfLedger *entry, int32_t *out_ready);

// Plain-text readiness table ending with the gate line.
enum HfStatus hf_ledger_report(const struct HfLedger *entry, char *buf, size_t cap, size_t *needed);

void hf_ledger_free(struct HfLedger *entry);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HITFUZZ_H */
