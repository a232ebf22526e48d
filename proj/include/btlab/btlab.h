/* Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0 */
#ifndef BTLAB_BTLAB_H
#define BTLAB_BTLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Stable C interface to the behavior-tree manipulation lab. All functions
 * return a status code; every other result travels through out-parameters.
 * Objects are opaque handles owned by the library and released with the
 * matching *_free call. On any failure btlab_last_error() describes the
 * problem for the calling thread. */

typedef enum btlab_status {
  BTLAB_OK = 0,
  BTLAB_ERR_ARGUMENT = 1, /* null pointer or out-of-range argument */
  BTLAB_ERR_CONFIG = 2,   /* invalid configuration, structure, or binding */
  BTLAB_ERR_IO = 3,       /* file could not be read or written */
  BTLAB_ERR_FAULT = 4,    /* simulation fault */
  BTLAB_ERR_INTERNAL = 5
} btlab_status;

typedef struct btlab_policy btlab_policy;
typedef struct btlab_report btlab_report;

/* Library version, e.g. "1.0.0". The pointer is static; do not free it. */
const char* btlab_version(void);

/* Last error message of the calling thread; empty string when no error has
 * occurred. The pointer stays valid until the next failing call. */
const char* btlab_last_error(void);

/* Frees a string returned through a char** out-parameter. */
void btlab_string_free(char* s);

/* Scenario ids, comma separated (static pointer, do not free). */
const char* btlab_scenario_ids(void);

typedef struct btlab_learn_options {
  int64_t budget;            /* candidate evaluations; < 0 = scenario default */
  int episodes_per_candidate; /* <= 0 = scenario default */
  uint64_t seed;
  int workers;               /* <= 1 = serial */
  double sigma0;             /* <= 0 = scenario default */
  int lambda;                /* <= 0 = automatic population size */
  int equal_weights;         /* nonzero: equal recombination weights */
  const char* out_dir;       /* NULL: write no files */
} btlab_learn_options;

/* Fills opts with defaults. */
btlab_status btlab_learn_options_init(btlab_learn_options* opts);

/* Learns a policy for the scenario and returns it. When out_dir is set,
 * also writes trace.csv, evals.csv, manifest.json, and policy.json. */
btlab_status btlab_learn(const char* scenario_id,
                         const btlab_learn_options* opts,
                         btlab_policy** out_policy);

/* Policy construction and persistence. */
btlab_status btlab_policy_load(const char* path, btlab_policy** out_policy);
btlab_status btlab_policy_save(const btlab_policy* policy, const char* path);

/* Baselines: kind is "no-search" (fixed straight descent) or "random"
 * (random parameters on the insertion tree, drawn from seed). */
btlab_status btlab_policy_baseline(const char* kind, uint64_t seed,
                                   btlab_policy** out_policy);

/* Concatenates an obstacle policy and a peg policy into a combined one. */
btlab_status btlab_policy_combine(const btlab_policy* obstacle,
                                  const btlab_policy* peg,
                                  btlab_policy** out_policy);

/* Scenario id of the policy (static lifetime tied to the policy). */
btlab_status btlab_policy_scenario(const btlab_policy* policy,
                                   const char** out_id);

/* Number of parameters. */
btlab_status btlab_policy_dim(const btlab_policy* policy, int* out_dim);

/* Copies the parameter vector into out (capacity cap entries). */
btlab_status btlab_policy_theta(const btlab_policy* policy, double* out,
                                size_t cap);

/* Human-readable description; free with btlab_string_free. */
btlab_status btlab_policy_describe(const btlab_policy* policy, char** out);

void btlab_policy_free(btlab_policy* policy);

typedef struct btlab_eval_options {
  int trials;
  uint64_t seed;
  int workers;
  int use_grid;          /* nonzero: fixed 15-pose start grid (peg tasks) */
  int has_fixed_shift;   /* nonzero: use fixed_shift_x/y for every trial */
  double fixed_shift_x;
  double fixed_shift_y;
} btlab_eval_options;

btlab_status btlab_eval_options_init(btlab_eval_options* opts);

/* Evaluates the policy on held-out trials of its own scenario. */
btlab_status btlab_evaluate(const btlab_policy* policy,
                            const btlab_eval_options* opts,
                            btlab_report** out_report);

btlab_status btlab_report_trials(const btlab_report* report, int* out);
btlab_status btlab_report_successes(const btlab_report* report, int* out);
btlab_status btlab_report_collisions(const btlab_report* report, int* out);
btlab_status btlab_report_success_rate(const btlab_report* report,
                                       double* out);
btlab_status btlab_report_mean_return(const btlab_report* report, double* out);

/* Full report as JSON; free with btlab_string_free. */
btlab_status btlab_report_json(const btlab_report* report, char** out);

void btlab_report_free(btlab_report* report);

/* Re-runs evaluation trial `trial` of the policy's scenario and writes the
 * step-by-step trajectory CSV to csv_path. */
btlab_status btlab_replay(const btlab_policy* policy, uint64_t seed, int trial,
                          const char* csv_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BTLAB_BTLAB_H */
