/* Copyright 2026 The vorient Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the vorient core. Handles are opaque; every fallible call
 * returns a vorient_status and leaves a message for vorient_last_error() on
 * the calling thread. Strings returned through char** are owned by the caller
 * and released with vorient_free(). */

#ifndef VORIENT_VORIENT_H_
#define VORIENT_VORIENT_H_

#include <stddef.h>

#if defined(_WIN32)
#define VORIENT_API __declspec(dllexport)
#else
#define VORIENT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vorient_status {
  VORIENT_OK = 0,
  VORIENT_INVALID_ARGUMENT = 1,
  VORIENT_CONFIG = 2,
  VORIENT_VALIDATION = 3,
  VORIENT_NOT_FOUND = 4,
  VORIENT_STAGE_ORDER = 5,
  VORIENT_STORE = 6,
  VORIENT_PROVIDER = 7,
  VORIENT_DEGENERATE = 8,
  VORIENT_PARSE = 9,
  VORIENT_INTERNAL = 10
} vorient_status;

typedef enum vorient_level {
  VORIENT_NOMINAL = 0,
  VORIENT_ORDINAL = 1,
  VORIENT_INTERVAL = 2
} vorient_level;

typedef struct vorient_study vorient_study;
typedef struct vorient_server vorient_server;

typedef void (*vorient_log_fn)(const char* line, void* user);

VORIENT_API const char* vorient_version(void);
/* Message of the last failed call on this thread; "" after a success. */
VORIENT_API const char* vorient_last_error(void);
VORIENT_API const char* vorient_status_name(vorient_status s);
VORIENT_API void vorient_free(char* p);

/* options_json (may be NULL):
 *   {"config": path, "store": dir, "mock": bool, "seed": int,
 *    "parallel": int, "force": bool}
 * "store" defaults to "./study"; without "config" the built-in 12x11x3
 * design is used. "mock" switches every provider to the offline mock and
 * "seed" then replaces the config seed. */
VORIENT_API vorient_status vorient_study_open(const char* options_json, vorient_study** out);
VORIENT_API void vorient_study_close(vorient_study* study);
/* Receives human-readable progress lines; NULL disables. */
VORIENT_API void vorient_study_set_log(vorient_study* study, vorient_log_fn fn, void* user);

/* stage: design | generate | code | consensus | sample | reliability |
 * analyze | report | run-all. args_json (may be NULL): {"force": bool,
 * "budget": int}. On success *summary_json (if non-NULL) receives a JSON
 * document: an object for one stage, an array for run-all. */
VORIENT_API vorient_status vorient_study_run(vorient_study* study, const char* stage,
                                             const char* args_json, char** summary_json);

/* options_json: {"host", "port" (0 = any free port), "token", "static_dir",
 * "coders": [ids to pre-register]}. *port receives the bound port. The study
 * must outlive the server. */
VORIENT_API vorient_status vorient_server_start(vorient_study* study, const char* options_json,
                                                vorient_server** out, int* port);
/* Blocks until vorient_server_stop() is called from another thread. */
VORIENT_API vorient_status vorient_server_wait(vorient_server* server);
/* Stops serving; a pending vorient_server_wait() returns. Safe to call from
 * any thread and more than once. */
VORIENT_API void vorient_server_stop(vorient_server* server);
/* Stops if needed and releases the handle. No thread may still be waiting. */
VORIENT_API void vorient_server_free(vorient_server* server);

/* Visual Orientalism Index: psi - cei. */
VORIENT_API double vorient_voi(double psi, double cei);

/* Pooled-variance Student's t from group descriptives. Any output pointer
 * may be NULL. */
VORIENT_API vorient_status vorient_student_t_summary(double n1, double mean1, double sd1,
                                                     double n2, double mean2, double sd2,
                                                     double* t, double* df, double* p,
                                                     double* cohens_d);

/* values is row-major [units x coders]; NaN marks a missing value. */
VORIENT_API vorient_status vorient_krippendorff_alpha(const double* values, size_t units,
                                                      size_t coders, vorient_level level,
                                                      double* alpha);

#ifdef __cplusplus
}
#endif

#endif /* VORIENT_VORIENT_H_ */
