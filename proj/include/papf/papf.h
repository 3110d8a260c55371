/* Copyright 2026 The PAPF Ballbot Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PAPF_PAPF_H_
#define PAPF_PAPF_H_

/* C interface to the ballbot shared-control simulator.
 *
 * Conventions:
 *   - Every fallible call returns papf_status. On failure a message is
 *     available from papf_last_error() on the same thread until the next
 *     failing call.
 *   - Objects are opaque handles created by *_load / *_run / *_build /
 *     *_start and released by the matching *_free. Passing NULL to a free
 *     function is a no-op.
 *   - Functions that return text take (buf, cap, needed): the full length
 *     (without the terminator) is stored in *needed, and if cap > needed the
 *     text plus a terminating NUL is copied into buf; a smaller nonzero cap
 *     only stores an empty string. Call once with cap 0 to size the buffer.
 *   - Handles are not thread-safe; distinct handles may be used concurrently.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(PAPF_BUILDING_LIBRARY)
#define PAPF_API __attribute__((visibility("default")))
#else
#define PAPF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum papf_status {
  PAPF_OK = 0,
  PAPF_ERROR_INTERNAL = 1,
  PAPF_ERROR_VALIDATION = 2, /* bad config, bad argument, unreadable input */
  PAPF_ERROR_NUMERIC = 3,    /* simulation produced a non-finite state */
  PAPF_ERROR_PORT_BUSY = 4,
  PAPF_ERROR_IO = 5          /* an output file could not be written */
} papf_status;

typedef enum papf_output_kind {
  PAPF_OUTPUT_TRAJECTORY_CSV = 0,
  PAPF_OUTPUT_TRAJECTORY_JSONL = 1,
  PAPF_OUTPUT_METRICS_JSON = 2,
  PAPF_OUTPUT_SUMMARY_CSV = 3
} papf_output_kind;

typedef struct papf_experiment papf_experiment;
typedef struct papf_result papf_result;
typedef struct papf_batch papf_batch;
typedef struct papf_course papf_course;
typedef struct papf_server papf_server;

/* ---- library ---- */

PAPF_API const char* papf_version(void);
/* Message of the last failure on this thread; "" if none. */
PAPF_API const char* papf_last_error(void);
/* Dotted config key of the last validation failure on this thread, or "". */
PAPF_API const char* papf_last_error_key(void);
/* "trace", "debug", "info", "warn", "error", "critical" or "off". */
PAPF_API papf_status papf_set_log_level(const char* level);

/* ---- experiments ---- */

PAPF_API papf_status papf_experiment_load(const char* path, papf_experiment** out);
/* base_dir resolves relative recording paths; may be NULL. */
PAPF_API papf_status papf_experiment_parse(const char* json_text, const char* base_dir,
                                           papf_experiment** out);
/* Sets the episode seed; a batch matrix is reduced to this single seed. */
PAPF_API papf_status papf_experiment_set_seed(papf_experiment* exp, uint64_t seed);
/* Sets the episode mode; a batch matrix is reduced to this single mode. */
PAPF_API papf_status papf_experiment_set_mode(papf_experiment* exp, const char* mode);
PAPF_API int papf_experiment_has_batch(const papf_experiment* exp);
/* Output path configured in the file for `kind`; "" when unset. Owned by exp. */
PAPF_API const char* papf_experiment_output_path(const papf_experiment* exp,
                                                 papf_output_kind kind);
/* Canonical JSON with every default filled in. */
PAPF_API papf_status papf_experiment_to_json(const papf_experiment* exp, char* buf, size_t cap,
                                             size_t* needed);
PAPF_API void papf_experiment_free(papf_experiment* exp);

/* ---- single episodes ---- */

typedef struct papf_metrics {
  double t_c;
  int32_t c_t;
  int32_t c_m;
  double c_i;
  int32_t failed;
  int32_t fallen;
  double min_clearance;
  double path_length;
  double mean_speed;
} papf_metrics;

PAPF_API papf_status papf_run(const papf_experiment* exp, papf_result** out);
PAPF_API papf_status papf_result_metrics(const papf_result* result, papf_metrics* out);
PAPF_API size_t papf_result_frame_count(const papf_result* result);
/* kind must be a trajectory or metrics kind. */
PAPF_API papf_status papf_result_write(const papf_result* result, papf_output_kind kind,
                                       const char* path);
PAPF_API papf_status papf_result_export(const papf_result* result, papf_output_kind kind,
                                        char* buf, size_t cap, size_t* needed);
PAPF_API void papf_result_free(papf_result* result);

/* ---- batches ---- */

typedef struct papf_cell_summary {
  const char* key; /* "<course>/<mode>", owned by the batch */
  size_t episodes;
  size_t aborted;
  double t_c_mean, t_c_se;
  double c_t_mean, c_t_se;
  double c_m_mean, c_m_se;
  double c_i_mean, c_i_se;
} papf_cell_summary;

/* Requires a batch section in the experiment. jobs >= 1. */
PAPF_API papf_status papf_batch_run(const papf_experiment* exp, int jobs, papf_batch** out);
PAPF_API size_t papf_batch_cell_count(const papf_batch* batch);
PAPF_API size_t papf_batch_failure_count(const papf_batch* batch);
PAPF_API papf_status papf_batch_cell(const papf_batch* batch, size_t index,
                                     papf_cell_summary* out);
PAPF_API papf_status papf_batch_write_summary(const papf_batch* batch, const char* path);
/* format 0: summary CSV, 1: fixed-width table. */
PAPF_API papf_status papf_batch_summary(const papf_batch* batch, int format, char* buf,
                                        size_t cap, size_t* needed);
PAPF_API void papf_batch_free(papf_batch* batch);

/* ---- courses ---- */

typedef struct papf_course_spec {
  const char* kind;    /* "training", "sturn", "zigzag" */
  const char* variant; /* "wide", "narrow" */
  double corridor_width; /* m; 0 selects the variant default */
  double wall_length;    /* m */
  uint64_t seed;
  int32_t clutter;
  double robot_radius;   /* m */
} papf_course_spec;

PAPF_API void papf_course_spec_default(papf_course_spec* spec);
PAPF_API papf_status papf_course_build(const papf_course_spec* spec, papf_course** out);
PAPF_API size_t papf_course_segment_count(const papf_course* course);
/* Either path may be NULL to skip that file. */
PAPF_API papf_status papf_course_write(const papf_course* course, const char* json_path,
                                       const char* segments_path);
/* format 0: JSON, 1: segment list "x1 y1 x2 y2" per line. */
PAPF_API papf_status papf_course_export(const papf_course* course, int format, char* buf,
                                        size_t cap, size_t* needed);
PAPF_API void papf_course_free(papf_course* course);

/* ---- live session server ---- */

typedef struct papf_server_options {
  const char* address; /* default "127.0.0.1" */
  uint16_t port;       /* 0 picks a free port */
  double stream_hz;
  double realtime_factor;
  const char* record_path; /* NULL or "" disables recording */
} papf_server_options;

PAPF_API void papf_server_options_default(papf_server_options* options);
PAPF_API papf_status papf_server_start(const papf_experiment* exp,
                                       const papf_server_options* options, papf_server** out);
PAPF_API uint16_t papf_server_port(const papf_server* server);
/* Stops both threads and flushes the recording. Safe to call twice. */
PAPF_API papf_status papf_server_stop(papf_server* server);
PAPF_API void papf_server_free(papf_server* server);

/* ---- one shared-control tick on plain data ---- */

typedef struct papf_vec2 {
  double x;
  double y;
} papf_vec2;

typedef struct papf_scan_point {
  double range;   /* m */
  double bearing; /* rad, robot frame, counterclockwise from the front */
} papf_scan_point;

typedef struct papf_shared_config {
  double eta_x;
  double eta_y;
  double delta_thre;
  double zeta;
  double epsilon;
  double corridor_half_width;
  double v_max;
  double alarm_on_dist;
  double alarm_full_dist;
  int32_t literal_gate; /* 0: decelerate-only gate, 1: literal gate */
} papf_shared_config;

typedef struct papf_shared_output {
  papf_vec2 command;
  papf_vec2 force;
  papf_vec2 ideal;
  double alarm_level;
} papf_shared_output;

PAPF_API void papf_shared_config_default(papf_shared_config* cfg);
/* cfg may be NULL for defaults. Commands are normalized to [-1, 1]. */
PAPF_API papf_status papf_shared_control_step(const papf_scan_point* points, size_t count,
                                              papf_vec2 v_usr, papf_vec2 v_fb, papf_vec2 v_old,
                                              const papf_shared_config* cfg,
                                              papf_shared_output* out);

#ifdef __cplusplus
}
#endif

#endif /* PAPF_PAPF_H_ */
