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

// papf: command-line front end. Everything goes through the C interface in
// papf/papf.h, so this file doubles as a consumer test of that boundary.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "papf/papf.h"

namespace {

namespace fs = std::filesystem;

// Process exit codes.
constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitPortBusy = 4;

int exit_code(papf_status st) {
  switch (st) {
    case PAPF_OK: return kExitOk;
    case PAPF_ERROR_VALIDATION: return kExitValidation;
    case PAPF_ERROR_NUMERIC: return kExitNumeric;
    case PAPF_ERROR_PORT_BUSY: return kExitPortBusy;
    case PAPF_ERROR_IO: return kExitIo;
    case PAPF_ERROR_INTERNAL: break;
  }
  return kExitIo;
}

int report(papf_status st) {
  std::cerr << "papf: error: " << papf_last_error();
  const std::string key = papf_last_error_key();
  if (st == PAPF_ERROR_VALIDATION && !key.empty()) std::cerr << " [key: " << key << "]";
  std::cerr << "\n";
  return exit_code(st);
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Experiment = Handle<papf_experiment, papf_experiment_free>;
using Result = Handle<papf_result, papf_result_free>;
using Batch = Handle<papf_batch, papf_batch_free>;
using Course = Handle<papf_course, papf_course_free>;
using ServerHandle = Handle<papf_server, papf_server_free>;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string out;
};

papf_status load(const Common& c, Experiment& exp) {
  papf_status st = papf_experiment_load(c.config.c_str(), &exp.p);
  if (st != PAPF_OK) return st;
  if (c.seed) {
    st = papf_experiment_set_seed(exp.p, *c.seed);
    if (st != PAPF_OK) return st;
  }
  if (!c.mode.empty()) st = papf_experiment_set_mode(exp.p, c.mode.c_str());
  return st;
}

// Resolves where an artifact goes: --out directory wins, then the path from
// the config file, then `fallback` in the working directory.
std::string artifact_path(const Common& c, const Experiment& exp, papf_output_kind kind,
                          const std::string& fallback) {
  const std::string configured = papf_experiment_output_path(exp.p, kind);
  if (!c.out.empty()) {
    const std::string name = configured.empty() ? fallback : fs::path(configured).filename().string();
    return (fs::path(c.out) / name).string();
  }
  return configured.empty() ? fallback : configured;
}

papf_status ensure_dir(const std::string& dir) {
  if (dir.empty()) return PAPF_OK;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "papf: error: cannot create directory '" << dir << "': " << ec.message() << "\n";
    return PAPF_ERROR_IO;
  }
  return PAPF_OK;
}

int cmd_run(const Common& c) {
  Experiment exp;
  if (papf_status st = load(c, exp); st != PAPF_OK) return report(st);
  if (papf_status st = ensure_dir(c.out); st != PAPF_OK) return exit_code(st);

  Result res;
  if (papf_status st = papf_run(exp.p, &res.p); st != PAPF_OK) return report(st);

  const std::string metrics = artifact_path(c, exp, PAPF_OUTPUT_METRICS_JSON, "metrics.json");
  const std::string traj = artifact_path(c, exp, PAPF_OUTPUT_TRAJECTORY_CSV, "trajectory.csv");
  if (papf_status st = papf_result_write(res.p, PAPF_OUTPUT_METRICS_JSON, metrics.c_str());
      st != PAPF_OK) {
    return report(st);
  }
  if (papf_status st = papf_result_write(res.p, PAPF_OUTPUT_TRAJECTORY_CSV, traj.c_str());
      st != PAPF_OK) {
    return report(st);
  }
  // The JSONL trajectory is only written on request.
  if (std::string(papf_experiment_output_path(exp.p, PAPF_OUTPUT_TRAJECTORY_JSONL)).size() > 0) {
    const std::string jsonl =
        artifact_path(c, exp, PAPF_OUTPUT_TRAJECTORY_JSONL, "trajectory.jsonl");
    if (papf_status st = papf_result_write(res.p, PAPF_OUTPUT_TRAJECTORY_JSONL, jsonl.c_str());
        st != PAPF_OK) {
      return report(st);
    }
  }

  papf_metrics m{};
  papf_result_metrics(res.p, &m);
  std::cout << "T_c " << m.t_c << " s  C_t " << m.c_t << "  C_m " << m.c_m << "  C_i " << m.c_i
            << "  min clearance " << m.min_clearance << " m" << (m.failed ? "  (timed out)" : "")
            << (m.fallen ? "  (fell)" : "") << "\n";
  std::cout << "wrote " << metrics << "\nwrote " << traj << "\n";
  return kExitOk;
}

int cmd_batch(const Common& c, int jobs) {
  Experiment exp;
  if (papf_status st = load(c, exp); st != PAPF_OK) return report(st);
  if (!papf_experiment_has_batch(exp.p)) {
    std::cerr << "papf: error: " << c.config << " has no batch section [key: batch]\n";
    return kExitValidation;
  }
  if (papf_status st = ensure_dir(c.out); st != PAPF_OK) return exit_code(st);

  Batch batch;
  if (papf_status st = papf_batch_run(exp.p, jobs, &batch.p); st != PAPF_OK) return report(st);

  size_t needed = 0;
  papf_batch_summary(batch.p, 1, nullptr, 0, &needed);
  std::string table(needed + 1, '\0');
  papf_batch_summary(batch.p, 1, table.data(), table.size(), &needed);
  table.resize(needed);
  std::cout << table;

  const std::string summary = artifact_path(c, exp, PAPF_OUTPUT_SUMMARY_CSV, "summary.csv");
  if (papf_status st = papf_batch_write_summary(batch.p, summary.c_str()); st != PAPF_OK) {
    return report(st);
  }
  std::cout << "wrote " << summary << "\n";
  return kExitOk;
}

struct CourseArgs {
  std::string kind = "sturn";
  std::string variant = "wide";
  double width = 0.0;
  double wall_length = 0.0;
  double radius = 0.0;
  std::uint64_t seed = 0;
  int clutter = 0;
};

int cmd_course(const CourseArgs& a, const std::string& out) {
  papf_course_spec spec;
  papf_course_spec_default(&spec);
  spec.kind = a.kind.c_str();
  spec.variant = a.variant.c_str();
  spec.corridor_width = a.width;
  if (a.wall_length > 0) spec.wall_length = a.wall_length;
  if (a.radius > 0) spec.robot_radius = a.radius;
  spec.seed = a.seed;
  spec.clutter = a.clutter;

  Course course;
  if (papf_status st = papf_course_build(&spec, &course.p); st != PAPF_OK) return report(st);
  if (papf_status st = ensure_dir(out); st != PAPF_OK) return exit_code(st);

  const std::string stem = a.kind + "-" + a.variant;
  const std::string json = (fs::path(out.empty() ? "." : out) / (stem + ".json")).string();
  const std::string segs = (fs::path(out.empty() ? "." : out) / (stem + ".segments")).string();
  if (papf_status st = papf_course_write(course.p, json.c_str(), segs.c_str()); st != PAPF_OK) {
    return report(st);
  }
  std::cout << papf_course_segment_count(course.p) << " segments\nwrote " << json << "\nwrote "
            << segs << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::uint16_t port = 8765;
  std::string address = "127.0.0.1";
  double realtime = 1.0;
  double stream_hz = 30.0;
  std::string record;
};

int cmd_serve(const Common& c, const ServeArgs& a) {
  Experiment exp;
  if (papf_status st = load(c, exp); st != PAPF_OK) return report(st);

  // Block the shutdown signals before any thread starts so that every thread
  // inherits the mask and only sigwait below sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  papf_server_options opt;
  papf_server_options_default(&opt);
  opt.address = a.address.c_str();
  opt.port = a.port;
  opt.realtime_factor = a.realtime;
  opt.stream_hz = a.stream_hz;
  opt.record_path = a.record.empty() ? nullptr : a.record.c_str();

  ServerHandle server;
  if (papf_status st = papf_server_start(exp.p, &opt, &server.p); st != PAPF_OK) {
    return report(st);
  }
  // Tests and scripts parse this line to learn the bound port.
  std::cout << "listening on ws://" << a.address << ":" << papf_server_port(server.p)
            << "/session" << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "papf: shutting down\n";
  if (papf_status st = papf_server_stop(server.p); st != PAPF_OK) return report(st);
  if (!a.record.empty()) std::cout << "wrote " << a.record << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* level = std::getenv("PAPF_LOG"); level && *level) {
    if (papf_set_log_level(level) != PAPF_OK) {
      std::cerr << "papf: warning: PAPF_LOG: " << papf_last_error() << "\n";
    }
  } else {
    papf_set_log_level("warn");
  }

  CLI::App app{"Shared-control ballbot simulator.\n"
               "Environment: PAPF_LOG=trace|debug|info|warn|error|critical|off sets log "
               "verbosity (default warn).\n"
               "Exit codes: 0 ok, 1 I/O failure, 2 invalid config or arguments, "
               "3 numeric abort, 4 port busy."};
  app.set_version_flag("--version", std::string(papf_version()));
  app.require_subcommand(1);

  Common common;
  int jobs = 1;
  CourseArgs course;
  ServeArgs serve;

  const auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--config", common.config, "Experiment JSON file")
        ->required();
    sub->add_option("--seed", common.seed, "Override the episode seed (a batch uses only it)");
    sub->add_option("--mode", common.mode,
                    "Override the control mode: no-sc, papf, papf-tracking, "
                    "papf-tracking-alarm (a batch uses only it)");
    if (with_out) {
      sub->add_option("--out", common.out,
                      "Output directory; overrides the directories of configured output paths");
    }
  };

  CLI::App* run = app.add_subcommand("run", "Run one episode; write metrics JSON and trajectory CSV");
  add_common(run, true);

  CLI::App* batch = app.add_subcommand("batch", "Run the batch matrix; print and write the summary");
  add_common(batch, true);
  batch->add_option("--jobs", jobs, "Episodes simulated in parallel")
      ->check(CLI::Range(1, 256));

  CLI::App* crs = app.add_subcommand("course", "Build a course; write its JSON and segment list");
  crs->add_option("--kind", course.kind, "training, sturn or zigzag")->capture_default_str();
  crs->add_option("--variant", course.variant, "wide or narrow")->capture_default_str();
  crs->add_option("--width", course.width, "Corridor width in m (0 = variant default)");
  crs->add_option("--wall-length", course.wall_length, "Wall segment length in m");
  crs->add_option("--radius", course.radius, "Robot radius in m used for the clearance check");
  crs->add_option("--seed", course.seed, "Seed for the training-course clutter");
  crs->add_option("--clutter", course.clutter, "Number of clutter obstacles (training only)");
  crs->add_option("--out", common.out, "Output directory (default: current directory)");

  CLI::App* srv = app.add_subcommand("serve", "Serve a live session at ws://<address>:<port>/session");
  add_common(srv, false);
  srv->add_option("--port", serve.port, "TCP port; 0 picks a free one")->capture_default_str();
  srv->add_option("--address", serve.address, "Bind address")->capture_default_str();
  srv->add_option("--record", serve.record, "Write a replayable command log (JSON lines)");
  srv->add_option("--realtime", serve.realtime, "Simulated seconds per wall-clock second")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  srv->add_option("--stream-hz", serve.stream_hz, "Frame rate sent to clients")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  if (*run) return cmd_run(common);
  if (*batch) return cmd_batch(common, jobs);
  if (*crs) return cmd_course(course, common.out);
  if (*srv) return cmd_serve(common, serve);
  return kExitValidation;
}
