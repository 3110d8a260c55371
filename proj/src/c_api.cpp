// Copyright 2026 The PAPF Ballbot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "papf/papf.h"

#include <array>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "papf/bridge.hpp"
#include "papf/error.hpp"
#include "papf/io.hpp"
#include "papf/sim.hpp"

struct papf_experiment {
  papf::io::ExperimentFile file;
};

struct papf_result {
  papf::sim::EpisodeResult result;
};

struct papf_batch {
  papf::sim::BatchResult result;
};

struct papf_course {
  papf::world::World world;
};

struct papf_server {
  std::unique_ptr<papf::bridge::Server> server;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_error_key;

papf_status fail(papf_status status, std::string message, std::string key = {}) {
  g_last_error = std::move(message);
  g_last_error_key = std::move(key);
  return status;
}

// Runs `body`, translating exceptions into status codes. Nothing may escape
// through the C boundary.
template <class F>
papf_status guarded(F&& body) {
  try {
    body();
    return PAPF_OK;
  } catch (const papf::ConfigError& e) {
    return fail(PAPF_ERROR_VALIDATION, e.what(), e.key());
  } catch (const papf::ParseError& e) {
    return fail(PAPF_ERROR_VALIDATION, e.what());
  } catch (const papf::DomainError& e) {
    return fail(PAPF_ERROR_VALIDATION, e.what());
  } catch (const papf::SynthesisError& e) {
    return fail(PAPF_ERROR_VALIDATION, e.what());
  } catch (const papf::NumericAbort& e) {
    return fail(PAPF_ERROR_NUMERIC, std::string(e.what()) + "\n" + e.dump());
  } catch (const papf::bridge::PortBusyError& e) {
    return fail(PAPF_ERROR_PORT_BUSY, e.what());
  } catch (const std::exception& e) {
    return fail(PAPF_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(PAPF_ERROR_INTERNAL, "unknown error");
  }
}

papf_status null_argument(const char* name) {
  return fail(PAPF_ERROR_VALIDATION, std::string(name) + " must not be NULL");
}

papf_status copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = text.size();
  if (buf && cap > text.size()) {
    std::memcpy(buf, text.data(), text.size());
    buf[text.size()] = '\0';
  } else if (buf && cap > 0) {
    buf[0] = '\0';
  }
  return PAPF_OK;
}

papf_status write_out(const std::string& path, const std::string& content) {
  try {
    papf::io::write_file(path, content);
  } catch (const std::exception& e) {
    return fail(PAPF_ERROR_IO, e.what(), path);
  }
  return PAPF_OK;
}

std::string result_text(const papf::sim::EpisodeResult& r, papf_output_kind kind) {
  std::ostringstream out;
  switch (kind) {
    case PAPF_OUTPUT_TRAJECTORY_CSV:
      papf::io::write_trajectory_csv(out, r);
      return out.str();
    case PAPF_OUTPUT_TRAJECTORY_JSONL:
      papf::io::write_trajectory_jsonl(out, r);
      return out.str();
    case PAPF_OUTPUT_METRICS_JSON:
      return papf::io::metrics_json(r);
    case PAPF_OUTPUT_SUMMARY_CSV:
      break;
  }
  throw papf::ConfigError("output kind does not apply to a single episode", "kind");
}

}  // namespace

extern "C" {

const char* papf_version(void) { return "1.0.0"; }

const char* papf_last_error(void) { return g_last_error.c_str(); }

const char* papf_last_error_key(void) { return g_last_error_key.c_str(); }

papf_status papf_set_log_level(const char* level) {
  if (!level) return null_argument("level");
  static constexpr std::array<const char*, 7> kNames = {"trace", "debug",    "info", "warn",
                                                       "error", "critical", "off"};
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (std::strcmp(level, kNames[i]) == 0) {
      spdlog::set_level(static_cast<spdlog::level::level_enum>(i));
      return PAPF_OK;
    }
  }
  return fail(PAPF_ERROR_VALIDATION, std::string("unknown log level '") + level + "'");
}

// ---- experiments ----

papf_status papf_experiment_load(const char* path, papf_experiment** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto exp = std::make_unique<papf_experiment>();
    exp->file = papf::io::load_experiment(path);
    *out = exp.release();
  });
}

papf_status papf_experiment_parse(const char* json_text, const char* base_dir,
                                  papf_experiment** out) {
  if (!json_text) return null_argument("json_text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto exp = std::make_unique<papf_experiment>();
    exp->file = papf::io::parse_experiment(json_text, base_dir ? base_dir : "");
    *out = exp.release();
  });
}

papf_status papf_experiment_set_seed(papf_experiment* exp, uint64_t seed) {
  if (!exp) return null_argument("exp");
  exp->file.episode.seed = seed;
  if (exp->file.batch) exp->file.batch->seeds = {seed};
  return PAPF_OK;
}

papf_status papf_experiment_set_mode(papf_experiment* exp, const char* mode) {
  if (!exp) return null_argument("exp");
  if (!mode) return null_argument("mode");
  return guarded([&] {
    const papf::ControlMode m = papf::parse_control_mode(mode);
    exp->file.episode.mode = m;
    if (exp->file.batch) exp->file.batch->modes = {m};
  });
}

int papf_experiment_has_batch(const papf_experiment* exp) {
  return exp && exp->file.batch ? 1 : 0;
}

const char* papf_experiment_output_path(const papf_experiment* exp, papf_output_kind kind) {
  if (!exp) return "";
  const papf::io::OutputPaths& o = exp->file.output;
  switch (kind) {
    case PAPF_OUTPUT_TRAJECTORY_CSV: return o.trajectory_csv.c_str();
    case PAPF_OUTPUT_TRAJECTORY_JSONL: return o.trajectory_jsonl.c_str();
    case PAPF_OUTPUT_METRICS_JSON: return o.metrics_json.c_str();
    case PAPF_OUTPUT_SUMMARY_CSV: return o.summary_csv.c_str();
  }
  return "";
}

papf_status papf_experiment_to_json(const papf_experiment* exp, char* buf, size_t cap,
                                    size_t* needed) {
  if (!exp) return null_argument("exp");
  return copy_out(papf::io::experiment_to_json(exp->file), buf, cap, needed);
}

void papf_experiment_free(papf_experiment* exp) { delete exp; }

// ---- single episodes ----

papf_status papf_run(const papf_experiment* exp, papf_result** out) {
  if (!exp) return null_argument("exp");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto res = std::make_unique<papf_result>();
    res->result = papf::sim::run_episode(exp->file.episode);
    *out = res.release();
  });
}

papf_status papf_result_metrics(const papf_result* result, papf_metrics* out) {
  if (!result) return null_argument("result");
  if (!out) return null_argument("out");
  const papf::sim::RunMetrics& m = result->result.metrics;
  *out = papf_metrics{m.t_c,     m.c_t,         m.c_m,           m.c_i,        m.failed ? 1 : 0,
                      m.fallen ? 1 : 0, m.min_clearance, m.path_length, m.mean_speed};
  return PAPF_OK;
}

size_t papf_result_frame_count(const papf_result* result) {
  return result ? result->result.trajectory.size() : 0;
}

papf_status papf_result_write(const papf_result* result, papf_output_kind kind,
                              const char* path) {
  if (!result) return null_argument("result");
  if (!path) return null_argument("path");
  std::string text;
  const papf_status st = guarded([&] { text = result_text(result->result, kind); });
  if (st != PAPF_OK) return st;
  return write_out(path, text);
}

papf_status papf_result_export(const papf_result* result, papf_output_kind kind, char* buf,
                               size_t cap, size_t* needed) {
  if (!result) return null_argument("result");
  std::string text;
  const papf_status st = guarded([&] { text = result_text(result->result, kind); });
  if (st != PAPF_OK) return st;
  return copy_out(text, buf, cap, needed);
}

void papf_result_free(papf_result* result) { delete result; }

// ---- batches ----

papf_status papf_batch_run(const papf_experiment* exp, int jobs, papf_batch** out) {
  if (!exp) return null_argument("exp");
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!exp->file.batch) {
    return fail(PAPF_ERROR_VALIDATION, "experiment has no batch section", "batch");
  }
  if (jobs < 1) return fail(PAPF_ERROR_VALIDATION, "jobs must be >= 1", "jobs");
  return guarded([&] {
    auto b = std::make_unique<papf_batch>();
    b->result = papf::sim::run_batch(papf::io::expand_batch(exp->file), exp->file.batch->seeds,
                                     exp->file.batch->repetitions, jobs);
    for (const auto& f : b->result.failures) {
      spdlog::warn("episode {} seed {} aborted: {}", f.cell, f.seed, f.message);
    }
    *out = b.release();
  });
}

size_t papf_batch_cell_count(const papf_batch* batch) {
  return batch ? batch->result.cells.size() : 0;
}

size_t papf_batch_failure_count(const papf_batch* batch) {
  return batch ? batch->result.failures.size() : 0;
}

papf_status papf_batch_cell(const papf_batch* batch, size_t index, papf_cell_summary* out) {
  if (!batch) return null_argument("batch");
  if (!out) return null_argument("out");
  if (index >= batch->result.cells.size()) {
    return fail(PAPF_ERROR_VALIDATION, "cell index out of range", "index");
  }
  const papf::sim::BatchCell& c = batch->result.cells[index];
  *out = papf_cell_summary{c.key.c_str(),      c.runs.size(),        c.aborted,
                           c.t_c.mean,         c.t_c.standard_error, c.c_t.mean,
                           c.c_t.standard_error, c.c_m.mean,         c.c_m.standard_error,
                           c.c_i.mean,         c.c_i.standard_error};
  return PAPF_OK;
}

papf_status papf_batch_write_summary(const papf_batch* batch, const char* path) {
  if (!batch) return null_argument("batch");
  if (!path) return null_argument("path");
  std::ostringstream out;
  papf::io::write_summary_csv(out, batch->result);
  return write_out(path, out.str());
}

papf_status papf_batch_summary(const papf_batch* batch, int format, char* buf, size_t cap,
                               size_t* needed) {
  if (!batch) return null_argument("batch");
  if (format == 0) {
    std::ostringstream out;
    papf::io::write_summary_csv(out, batch->result);
    return copy_out(out.str(), buf, cap, needed);
  }
  if (format == 1) return copy_out(papf::io::summary_table(batch->result), buf, cap, needed);
  return fail(PAPF_ERROR_VALIDATION, "format must be 0 or 1", "format");
}

void papf_batch_free(papf_batch* batch) { delete batch; }

// ---- courses ----

void papf_course_spec_default(papf_course_spec* spec) {
  if (!spec) return;
  const papf::world::CourseSpec d;
  *spec = papf_course_spec{"sturn",       "wide", d.corridor_width, d.wall_length,
                           d.seed,        d.clutter, d.robot_radius};
}

papf_status papf_course_build(const papf_course_spec* spec, papf_course** out) {
  if (!spec) return null_argument("spec");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    papf::world::CourseSpec cs;
    cs.kind = papf::world::parse_course_kind(spec->kind ? spec->kind : "");
    cs.variant = papf::world::parse_course_variant(spec->variant ? spec->variant : "");
    cs.corridor_width = spec->corridor_width;
    cs.wall_length = spec->wall_length;
    cs.seed = spec->seed;
    cs.clutter = spec->clutter;
    cs.robot_radius = spec->robot_radius;
    auto c = std::make_unique<papf_course>();
    c->world = papf::world::build_course(cs);
    *out = c.release();
  });
}

size_t papf_course_segment_count(const papf_course* course) {
  return course ? course->world.segments.size() : 0;
}

papf_status papf_course_write(const papf_course* course, const char* json_path,
                              const char* segments_path) {
  if (!course) return null_argument("course");
  if (json_path && *json_path) {
    const papf_status st = write_out(json_path, papf::world::world_to_json(course->world));
    if (st != PAPF_OK) return st;
  }
  if (segments_path && *segments_path) {
    return write_out(segments_path, papf::world::segments_to_text(course->world));
  }
  return PAPF_OK;
}

papf_status papf_course_export(const papf_course* course, int format, char* buf, size_t cap,
                               size_t* needed) {
  if (!course) return null_argument("course");
  if (format == 0) return copy_out(papf::world::world_to_json(course->world), buf, cap, needed);
  if (format == 1) return copy_out(papf::world::segments_to_text(course->world), buf, cap, needed);
  return fail(PAPF_ERROR_VALIDATION, "format must be 0 or 1", "format");
}

void papf_course_free(papf_course* course) { delete course; }

// ---- live session server ----

void papf_server_options_default(papf_server_options* options) {
  if (!options) return;
  const papf::bridge::ServerOptions d;
  *options = papf_server_options{"127.0.0.1", d.port, d.stream_hz, d.realtime_factor, nullptr};
}

papf_status papf_server_start(const papf_experiment* exp, const papf_server_options* options,
                              papf_server** out) {
  if (!exp) return null_argument("exp");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    papf::bridge::ServerOptions opt;
    if (options) {
      if (options->address) opt.address = options->address;
      opt.port = options->port;
      opt.stream_hz = options->stream_hz;
      opt.realtime_factor = options->realtime_factor;
      if (options->record_path) opt.record_path = options->record_path;
    }
    auto s = std::make_unique<papf_server>();
    s->server = std::make_unique<papf::bridge::Server>(exp->file.episode, opt);
    s->server->start();
    *out = s.release();
  });
}

uint16_t papf_server_port(const papf_server* server) {
  return server ? server->server->port() : 0;
}

papf_status papf_server_stop(papf_server* server) {
  if (!server) return null_argument("server");
  return guarded([&] { server->server->stop(); });
}

void papf_server_free(papf_server* server) { delete server; }

// ---- shared control ----

void papf_shared_config_default(papf_shared_config* cfg) {
  if (!cfg) return;
  const papf::shared::PapfConfig d;
  *cfg = papf_shared_config{d.eta_x,
                            d.eta_y,
                            d.delta_thre,
                            d.zeta,
                            d.epsilon,
                            d.corridor_half_width,
                            d.v_max,
                            d.alarm_on_dist,
                            d.alarm_full_dist,
                            d.gate_mode == papf::shared::GateMode::kLiteral ? 1 : 0};
}

papf_status papf_shared_control_step(const papf_scan_point* points, size_t count,
                                     papf_vec2 v_usr, papf_vec2 v_fb, papf_vec2 v_old,
                                     const papf_shared_config* cfg, papf_shared_output* out) {
  if (!points && count > 0) return null_argument("points");
  if (!out) return null_argument("out");
  return guarded([&] {
    papf::shared::PapfConfig c;
    if (cfg) {
      c.eta_x = cfg->eta_x;
      c.eta_y = cfg->eta_y;
      c.delta_thre = cfg->delta_thre;
      c.zeta = cfg->zeta;
      c.epsilon = cfg->epsilon;
      c.corridor_half_width = cfg->corridor_half_width;
      c.v_max = cfg->v_max;
      c.alarm_on_dist = cfg->alarm_on_dist;
      c.alarm_full_dist = cfg->alarm_full_dist;
      c.gate_mode = cfg->literal_gate ? papf::shared::GateMode::kLiteral
                                      : papf::shared::GateMode::kDecelerateOnly;
    }
    c.validate();
    papf::shared::ObstacleScan scan;
    scan.points.reserve(count);
    for (size_t i = 0; i < count; ++i) scan.points.push_back({points[i].range, points[i].bearing});
    const auto r = papf::shared::shared_control_step(
        papf::shared::NormalizedCommand::clamped(v_usr.x, v_usr.y), scan,
        papf::shared::NormalizedCommand::clamped(v_fb.x, v_fb.y),
        papf::shared::NormalizedCommand::clamped(v_old.x, v_old.y), c);
    out->command = {r.command.x, r.command.y};
    out->force = {r.diagnostics.force.fx, r.diagnostics.force.fy};
    out->ideal = {r.diagnostics.ideal.x, r.diagnostics.ideal.y};
    out->alarm_level = r.diagnostics.alarm_level;
  });
}

}  // extern "C"
