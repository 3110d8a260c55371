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

#ifndef PAPF_IO_HPP_
#define PAPF_IO_HPP_

// Experiment files and result export.
//
// Every writer here is a pure function of its input: fixed column order,
// fixed number formatting, no timestamps. Two runs of the same config and
// seed therefore produce byte-identical files.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "papf/sim.hpp"

namespace papf::io {

// First line of every CSV written by this library.
inline constexpr std::string_view kVersionLine = "# papf-ballbot 1.0.0";

// Column names of the trajectory CSV, in order.
const std::vector<std::string>& trajectory_columns();

void write_trajectory_csv(std::ostream& out, const sim::EpisodeResult& result);
void write_trajectory_jsonl(std::ostream& out, const sim::EpisodeResult& result);
std::string metrics_json(const sim::EpisodeResult& result);

// Table layout: one row per metric (T_c, C_t, C_m, C_i and the auxiliary
// ones), one mean column and one SE column per batch cell. Aborted episodes
// follow in a trailing "# failures" section.
void write_summary_csv(std::ostream& out, const sim::BatchResult& batch);
// Fixed-width rendering of the same table for terminals.
std::string summary_table(const sim::BatchResult& batch);

// Writes `content` to `path`, creating parent directories. Throws
// std::runtime_error naming the path on failure.
void write_file(const std::string& path, const std::string& content);

struct BatchMatrix {
  std::vector<ControlMode> modes;
  // Empty: every cell uses the episode's own world.
  std::vector<world::CourseSpec> courses;
  std::vector<std::uint64_t> seeds;
  int repetitions = 1;
};

// Empty strings mean "do not write".
struct OutputPaths {
  std::string trajectory_csv;
  std::string trajectory_jsonl;
  std::string metrics_json;
  std::string summary_csv;
};

struct ExperimentFile {
  sim::EpisodeConfig episode;
  std::optional<BatchMatrix> batch;
  OutputPaths output;
};

// Parses and validates an experiment document. Unknown keys, wrong types and
// out-of-range values throw ConfigError whose key() is the dotted path of
// the offending entry, e.g. "episode.papf.zeta". Relative recording paths
// are resolved against `base_dir`.
ExperimentFile parse_experiment(std::string_view json_text, const std::string& base_dir = {});
// Throws ConfigError naming the path when the file cannot be read.
ExperimentFile load_experiment(const std::string& path);

// Canonical JSON form; parse_experiment(experiment_to_json(x)) reproduces x.
std::string experiment_to_json(const ExperimentFile& experiment);

// One EpisodeConfig per (course, mode) cell of the matrix.
std::vector<sim::EpisodeConfig> expand_batch(const ExperimentFile& experiment);

}  // namespace papf::io

#endif  // PAPF_IO_HPP_
